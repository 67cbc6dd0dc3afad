import { describe, expect, it } from 'vitest'

import { SeriesStore } from '../src/series.js'
import type { MetricRecord } from '../src/types.js'

function record(learner: number, iteration: number, loss = 1.0, accuracy = 0.5): MetricRecord {
  return {
    iteration,
    loss,
    accuracy,
    learning_rate: 0.1,
    wallclock_ms: iteration,
    learner_id: learner,
  }
}

describe('SeriesStore', () => {
  it('100 streamed records become 100 points in iteration order', () => {
    const store = new SeriesStore()
    for (let i = 1; i <= 100; i++) store.add(record(0, i * 10, 1 / i))
    const { xs } = store.points(0, 'loss')
    expect(xs.length).toBe(100)
    expect(xs).toEqual([...xs].sort((a, b) => a - b))
  })

  it('reconnect replay produces no duplicate points', () => {
    const store = new SeriesStore()
    const frames = [record(0, 10), record(0, 20), record(1, 10), record(0, 30)]
    for (const f of frames) store.add(f)
    // reconnect: server replays everything, then continues
    for (const f of frames) expect(store.add(f)).toBe(false)
    store.add(record(0, 40))
    expect(store.points(0, 'loss').xs).toEqual([10, 20, 30, 40])
    expect(store.points(1, 'loss').xs).toEqual([10])
    expect(store.dropped).toBe(4)
  })

  it('stale out-of-order records are dropped per learner', () => {
    const store = new SeriesStore()
    store.add(record(0, 50))
    expect(store.add(record(0, 40))).toBe(false)
    expect(store.add(record(1, 40))).toBe(true) // other learner unaffected
  })

  it('tracks learners and latest iteration', () => {
    const store = new SeriesStore()
    store.add(record(2, 10))
    store.add(record(0, 30))
    expect(store.learners()).toEqual([0, 2])
    expect(store.latestIteration(0)).toBe(30)
    expect(store.latestIteration(5)).toBe(-1)
  })

  it('keeps loss and accuracy aligned', () => {
    const store = new SeriesStore()
    store.add(record(0, 10, 0.9, 0.1))
    store.add(record(0, 20, 0.5, 0.7))
    expect(store.values(0, 'loss')).toEqual([0.9, 0.5])
    expect(store.values(0, 'accuracy')).toEqual([0.1, 0.7])
  })
})
