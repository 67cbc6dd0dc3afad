/**
 * Per-job metric series: bounded ring buffers keyed by learner, deduped
 * by (learner_id, iteration) so a websocket reconnect replaying history
 * never produces duplicate points, and append-only in iteration order.
 */
import { PointRing } from './ringBuffer.js'
import type { MetricRecord } from './types.js'

export type MetricName = 'loss' | 'accuracy'

export class SeriesStore {
  private readonly rings = new Map<string, PointRing>()
  /** highest iteration accepted per learner (dedupe + ordering) */
  private readonly highWater = new Map<number, number>()
  accepted = 0
  dropped = 0

  constructor(readonly capacity: number = 10_000) {}

  private ring(learner: number, metric: MetricName): PointRing {
    const key = `${learner}:${metric}`
    let ring = this.rings.get(key)
    if (!ring) {
      ring = new PointRing(this.capacity)
      this.rings.set(key, ring)
    }
    return ring
  }

  /** Returns true when the record was appended (not a duplicate/stale). */
  add(record: MetricRecord): boolean {
    const last = this.highWater.get(record.learner_id) ?? -Infinity
    if (record.iteration <= last) {
      this.dropped++
      return false
    }
    this.highWater.set(record.learner_id, record.iteration)
    this.ring(record.learner_id, 'loss').push(record.iteration, record.loss)
    this.ring(record.learner_id, 'accuracy').push(record.iteration, record.accuracy)
    this.accepted++
    return true
  }

  learners(): number[] {
    return [...this.highWater.keys()].sort((a, b) => a - b)
  }

  points(learner: number, metric: MetricName): { xs: number[]; ys: number[] } {
    const ring = this.rings.get(`${learner}:${metric}`)
    return ring ? ring.toArrays() : { xs: [], ys: [] }
  }

  /** y-values of one metric for one learner, oldest-first. */
  values(learner: number, metric: MetricName): number[] {
    return this.points(learner, metric).ys
  }

  latestIteration(learner: number): number {
    return this.highWater.get(learner) ?? -1
  }

  clear(): void {
    this.rings.clear()
    this.highWater.clear()
    this.accepted = 0
    this.dropped = 0
  }
}
