import { describe, expect, it, vi } from 'vitest'

import { MetricsStream, type WebSocketLike } from '../src/stream.js'

class FakeSocket implements WebSocketLike {
  onopen: ((ev?: unknown) => void) | null = null
  onmessage: ((ev: { data: unknown }) => void) | null = null
  onclose: ((ev?: unknown) => void) | null = null
  onerror: ((ev?: unknown) => void) | null = null
  closed = false

  close(): void {
    this.closed = true
  }
}

describe('MetricsStream', () => {
  it('parses frames, ignores junk, reconnects with backoff after close', async () => {
    vi.useFakeTimers()
    const sockets: FakeSocket[] = []
    const records: number[] = []
    const statuses: string[] = []
    const stream = new MetricsStream(
      'ws://x/metrics',
      {
        onRecord: (r) => records.push(r.iteration),
        onStatus: (s) => statuses.push(s),
      },
      () => {
        const socket = new FakeSocket()
        sockets.push(socket)
        return socket
      },
    )
    stream.start()
    expect(sockets.length).toBe(1)
    sockets[0].onopen?.()
    sockets[0].onmessage?.({ data: 'not json{{' })
    sockets[0].onmessage?.({ data: JSON.stringify({ nope: 1 }) })
    sockets[0].onmessage?.({
      data: JSON.stringify({
        iteration: 10, loss: 1, accuracy: 0.5, learning_rate: 0.1,
        wallclock_ms: 5, learner_id: 0,
      }),
    })
    expect(records).toEqual([10])

    sockets[0].onclose?.()
    expect(sockets.length).toBe(1)
    await vi.advanceTimersByTimeAsync(500) // first backoff step
    expect(sockets.length).toBe(2)
    expect(statuses).toContain('reconnecting')

    // second drop backs off longer (exponential)
    sockets[1].onclose?.()
    await vi.advanceTimersByTimeAsync(500)
    expect(sockets.length).toBe(2)
    await vi.advanceTimersByTimeAsync(600)
    expect(sockets.length).toBe(3)

    stream.stop()
    sockets[2].onclose?.()
    await vi.advanceTimersByTimeAsync(60_000)
    expect(sockets.length).toBe(3) // no reconnect after stop
    vi.useRealTimers()
  })
})
