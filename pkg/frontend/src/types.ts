/** Wire shapes of the dlaas REST/websocket API. */

export interface MetricRecord {
  iteration: number
  loss: number
  accuracy: number
  learning_rate: number
  wallclock_ms: number
  learner_id: number
}

export interface LearnerStatus {
  phase: string
  iteration: number
  epoch?: number
  epoch_done?: number
  error?: string | null
}

export interface JobSummary {
  training_id: string
  model_id: string
  state: string
  learners: number
  gpus: number
  memory_mib: number
  solver: string
  epochs: number
  created_at: number
  completed_at: number | null
  recoveries: number
  failure_reason: string
  ps_endpoints: string[]
  learner_statuses: Record<string, LearnerStatus>
}

export const TERMINAL_STATES = new Set(['COMPLETED', 'FAILED', 'HALTED'])

export function isMetricRecord(value: unknown): value is MetricRecord {
  if (typeof value !== 'object' || value === null) return false
  const v = value as Record<string, unknown>
  return (
    typeof v.iteration === 'number' &&
    typeof v.loss === 'number' &&
    typeof v.accuracy === 'number' &&
    typeof v.learning_rate === 'number' &&
    typeof v.wallclock_ms === 'number' &&
    typeof v.learner_id === 'number'
  )
}
