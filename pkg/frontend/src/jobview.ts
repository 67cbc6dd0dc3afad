/**
 * One job's dashboard state, derived purely from API data plus the
 * replayed metric stream: reloading the page and rebuilding a JobView
 * reconstructs the same state (nothing lives only in the DOM).
 */

import { plateauIndicator, DEFAULT_EPSILON, DEFAULT_WINDOW } from './plateau.js'
import { SeriesStore } from './series.js'
import type { JobSummary, MetricRecord } from './types.js'

export class JobView {
  summary: JobSummary | null = null
  readonly series = new SeriesStore()
  /** latest record seen per learner */
  readonly latest = new Map<number, MetricRecord>()

  constructor(
    readonly trainingId: string,
    readonly plateauWindow: number = DEFAULT_WINDOW,
    readonly plateauEpsilon: number = DEFAULT_EPSILON,
  ) {}

  applySummary(summary: JobSummary): void {
    this.summary = summary
  }

  applyRecord(record: MetricRecord): boolean {
    const appended = this.series.add(record)
    if (appended) this.latest.set(record.learner_id, record)
    return appended
  }

  state(): string {
    return this.summary?.state ?? 'UNKNOWN'
  }

  learnerPhases(): Record<string, string> {
    const phases: Record<string, string> = {}
    for (const [id, status] of Object.entries(this.summary?.learner_statuses ?? {})) {
      phases[id] = status.phase
    }
    return phases
  }

  /** Plateau badge over learner 0's accuracy series (the headline curve). */
  plateau(): boolean {
    return plateauIndicator(
      this.series.values(0, 'accuracy'),
      this.plateauWindow,
      this.plateauEpsilon,
    )
  }

  canHalt(): boolean {
    return this.state() === 'RUNNING'
  }
}
