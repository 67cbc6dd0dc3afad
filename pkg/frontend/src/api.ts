/** Thin typed client over the dlaas REST API. */

import type { JobSummary } from './types.js'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message)
  }
}

async function toError(response: Response): Promise<ApiError> {
  let code = 'HTTP_ERROR'
  let message = response.statusText
  try {
    const body = await response.json()
    const detail = body?.detail ?? body
    if (detail?.code) code = detail.code
    if (detail?.message) message = detail.message
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, code, message)
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly token?: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { 'content-type': 'application/json' }
    if (this.token) headers.authorization = `Bearer ${this.token}`
    return headers
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    })
    if (!response.ok) throw await toError(response)
    if (response.status === 204) return undefined as T
    return (await response.json()) as T
  }

  listJobs(): Promise<{ trainings: JobSummary[] }> {
    return this.call('GET', '/v1/trainings')
  }

  getJob(trainingId: string): Promise<JobSummary> {
    return this.call('GET', `/v1/trainings/${trainingId}`)
  }

  halt(trainingId: string): Promise<unknown> {
    return this.call('POST', `/v1/trainings/${trainingId}/halt`)
  }

  /** Resubmit: new training job for the model with edited overrides. */
  resubmit(
    modelId: string,
    overrides: { learners?: number; gpus?: number; memory_mib?: number },
  ): Promise<{ training_id: string }> {
    return this.call('POST', '/v1/trainings', { model_id: modelId, overrides })
  }

  metricsSocketUrl(trainingId: string): string {
    const ws = this.baseUrl.replace(/^http/, 'ws')
    const token = this.token ? `&token=${this.token}` : ''
    return `${ws}/v1/trainings/${trainingId}/metrics?follow=true${token}`
  }
}
