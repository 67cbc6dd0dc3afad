/**
 * Metric websocket with auto-reconnect.
 *
 * Disconnections reconnect with exponential backoff (0.5s doubling to
 * 8s); every (re)connection replays the server-side history, so the
 * consumer must dedupe (SeriesStore does, by (learner_id, iteration)).
 * The socket constructor is injectable: browsers pass the native
 * WebSocket, node tests pass the `ws` implementation.
 */

import { isMetricRecord, type MetricRecord } from './types.js'

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null
  onmessage: ((ev: { data: unknown }) => void) | null
  onclose: ((ev?: unknown) => void) | null
  onerror: ((ev?: unknown) => void) | null
  close(): void
}

export type SocketFactory = (url: string) => WebSocketLike

export interface StreamCallbacks {
  onRecord: (record: MetricRecord) => void
  onStatus?: (status: 'connecting' | 'open' | 'closed' | 'reconnecting') => void
}

const BACKOFF_BASE_MS = 500
const BACKOFF_MAX_MS = 8_000

export class MetricsStream {
  private socket: WebSocketLike | null = null
  private stopped = false
  private attempts = 0
  private timer: ReturnType<typeof setTimeout> | null = null

  constructor(
    private readonly url: string,
    private readonly callbacks: StreamCallbacks,
    private readonly factory: SocketFactory,
  ) {}

  start(): void {
    this.stopped = false
    this.connect()
  }

  private connect(): void {
    if (this.stopped) return
    this.callbacks.onStatus?.(this.attempts === 0 ? 'connecting' : 'reconnecting')
    const socket = this.factory(this.url)
    this.socket = socket
    socket.onopen = () => {
      this.attempts = 0
      this.callbacks.onStatus?.('open')
    }
    socket.onmessage = (ev) => {
      let parsed: unknown
      try {
        parsed = JSON.parse(String(ev.data))
      } catch {
        return // tolerate junk frames
      }
      if (isMetricRecord(parsed)) this.callbacks.onRecord(parsed)
    }
    socket.onerror = () => {
      /* close follows; reconnect handled there */
    }
    socket.onclose = () => {
      this.callbacks.onStatus?.('closed')
      this.scheduleReconnect()
    }
  }

  private scheduleReconnect(): void {
    if (this.stopped) return
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_MAX_MS)
    this.attempts++
    this.timer = setTimeout(() => this.connect(), delay)
  }

  /** Let the current socket drain (server closes after replay on terminal
   * jobs) but never reconnect again. */
  settle(): void {
    this.stopped = true
    if (this.timer) clearTimeout(this.timer)
  }

  stop(): void {
    this.stopped = true
    if (this.timer) clearTimeout(this.timer)
    this.socket?.close()
  }
}
