/**
 * Page controller: the job table (polled every 2 s), one detail panel
 * per opened job (metric websocket + charts + plateau badge), and the
 * halt / resubmit controls.
 */

import { ApiClient, ApiError } from './api.js'
import { MetricChart } from './chart.js'
import { JobView } from './jobview.js'
import { MetricsStream, type SocketFactory } from './stream.js'
import { TERMINAL_STATES, type JobSummary } from './types.js'

export const POLL_INTERVAL_MS = 2_000

export interface AppOptions {
  api: ApiClient
  root: HTMLElement
  socketFactory: SocketFactory
  pollIntervalMs?: number
}

export class Dashboard {
  readonly views = new Map<string, JobView>()
  private readonly streams = new Map<string, MetricsStream>()
  private readonly charts = new Map<string, MetricChart[]>()
  private pollTimer: ReturnType<typeof setInterval> | null = null
  private openId: string | null = null

  constructor(private readonly options: AppOptions) {}

  start(): void {
    this.renderShell()
    void this.refresh()
    this.pollTimer = setInterval(
      () => void this.refresh(),
      this.options.pollIntervalMs ?? POLL_INTERVAL_MS,
    )
  }

  stop(): void {
    if (this.pollTimer) clearInterval(this.pollTimer)
    for (const stream of this.streams.values()) stream.stop()
    this.streams.clear()
  }

  private renderShell(): void {
    this.options.root.innerHTML = `
      <h1>training jobs</h1>
      <div id="banner" class="banner hidden"></div>
      <table id="jobs" class="jobs">
        <thead><tr>
          <th>training id</th><th>state</th><th>learners</th>
          <th>solver</th><th>progress</th><th></th>
        </tr></thead>
        <tbody></tbody>
      </table>
      <div id="detail" class="detail hidden"></div>
      <div id="toast" class="toast hidden"></div>`
  }

  async refresh(): Promise<void> {
    let jobs: JobSummary[]
    try {
      jobs = (await this.options.api.listJobs()).trainings
      this.banner(null)
    } catch (err) {
      this.banner(`API unreachable: ${String(err)}`)
      return
    }
    for (const job of jobs) {
      let view = this.views.get(job.training_id)
      if (!view) {
        view = new JobView(job.training_id)
        this.views.set(job.training_id, view)
      }
      view.applySummary(job)
    }
    this.renderTable(jobs)
    if (this.openId) this.renderDetail(this.openId)
  }

  private banner(message: string | null): void {
    const banner = this.options.root.querySelector<HTMLElement>('#banner')
    if (!banner) return
    banner.classList.toggle('hidden', message === null)
    if (message !== null) banner.textContent = message
  }

  toast(message: string): void {
    const toast = this.options.root.querySelector<HTMLElement>('#toast')
    if (!toast) return
    toast.textContent = message
    toast.classList.remove('hidden')
    setTimeout(() => toast.classList.add('hidden'), 4_000)
  }

  private renderTable(jobs: JobSummary[]): void {
    const body = this.options.root.querySelector<HTMLElement>('#jobs tbody')
    if (!body) return
    body.innerHTML = ''
    for (const job of jobs.sort((a, b) => b.created_at - a.created_at)) {
      const row = document.createElement('tr')
      row.dataset.trainingId = job.training_id
      const iterations = Object.values(job.learner_statuses ?? {})
        .map((s) => s.iteration)
        .reduce((a, b) => Math.max(a, b), 0)
      row.innerHTML = `
        <td class="mono">${job.training_id}</td>
        <td class="state state-${job.state}">${job.state}</td>
        <td>${job.learners}</td>
        <td>${job.solver}</td>
        <td>iter ${iterations}</td>
        <td><button class="open">open</button></td>`
      row.querySelector('button.open')?.addEventListener('click', () => this.open(job.training_id))
      body.appendChild(row)
    }
  }

  open(trainingId: string): void {
    if (this.openId && this.openId !== trainingId) {
      this.streams.get(this.openId)?.stop()
      this.streams.delete(this.openId)
      this.charts.delete(this.openId)
    }
    this.openId = trainingId
    let view = this.views.get(trainingId)
    if (!view) {
      view = new JobView(trainingId)
      this.views.set(trainingId, view)
    }
    if (!this.streams.has(trainingId)) {
      const stream = new MetricsStream(
        this.options.api.metricsSocketUrl(trainingId),
        {
          onRecord: (record) => {
            view!.applyRecord(record)
            this.charts.get(trainingId)?.forEach((chart) => chart.render())
          },
          onStatus: (status) => {
            if (status === 'reconnecting') this.banner('metric stream reconnecting...')
            else if (status === 'open') this.banner(null)
          },
        },
        this.options.socketFactory,
      )
      this.streams.set(trainingId, stream)
      stream.start()
    }
    this.renderDetail(trainingId)
  }

  private renderDetail(trainingId: string): void {
    const view = this.views.get(trainingId)
    const detail = this.options.root.querySelector<HTMLElement>('#detail')
    if (!view || !detail) return
    detail.classList.remove('hidden')
    if (!detail.dataset.trainingId || detail.dataset.trainingId !== trainingId) {
      detail.dataset.trainingId = trainingId
      detail.innerHTML = `
        <h2 class="mono">${trainingId}</h2>
        <div class="controls">
          <span id="plateau" class="badge hidden">accuracy plateau</span>
          <button id="halt">halt</button>
          <form id="resubmit">
            <label>learners <input name="learners" type="number" min="1" value="2"></label>
            <button type="submit">resubmit</button>
          </form>
        </div>
        <div id="phases"></div>
        <canvas id="loss-chart" width="720" height="220"></canvas>
        <canvas id="acc-chart" width="720" height="220"></canvas>`
      const lossCanvas = detail.querySelector<HTMLCanvasElement>('#loss-chart')!
      const accCanvas = detail.querySelector<HTMLCanvasElement>('#acc-chart')!
      this.charts.set(trainingId, [
        new MetricChart(lossCanvas, view.series, 'loss', 'loss'),
        new MetricChart(accCanvas, view.series, 'accuracy', 'accuracy'),
      ])
      detail.querySelector<HTMLButtonElement>('#halt')?.addEventListener('click', () => {
        void this.halt(trainingId)
      })
      detail.querySelector<HTMLFormElement>('#resubmit')?.addEventListener('submit', (ev) => {
        ev.preventDefault()
        const input = detail.querySelector<HTMLInputElement>('input[name=learners]')
        void this.resubmit(trainingId, Number(input?.value ?? '1'))
      })
    }
    const phases = detail.querySelector<HTMLElement>('#phases')
    if (phases) {
      const entries = Object.entries(view.learnerPhases())
        .map(([id, phase]) => `<span class="phase">learner-${id}: ${phase}</span>`)
        .join(' ')
      phases.innerHTML = `state: <b class="state-${view.state()}">${view.state()}</b> ${entries}`
    }
    const haltButton = detail.querySelector<HTMLButtonElement>('#halt')
    if (haltButton) haltButton.disabled = !view.canHalt()
    const badge = detail.querySelector<HTMLElement>('#plateau')
    if (badge) badge.classList.toggle('hidden', !view.plateau())
    this.charts.get(trainingId)?.forEach((chart) => chart.render())
    if (view.summary && TERMINAL_STATES.has(view.summary.state)) {
      // server closes the stream after replaying a terminal job's log;
      // keep that replay flowing but stop reconnecting afterwards
      this.streams.get(trainingId)?.settle()
    }
  }

  async halt(trainingId: string): Promise<void> {
    try {
      await this.options.api.halt(trainingId)
      this.toast(`halting ${trainingId}`)
      await this.refresh()
    } catch (err) {
      this.toast(err instanceof ApiError ? `halt failed: ${err.message}` : String(err))
    }
  }

  async resubmit(trainingId: string, learners: number): Promise<void> {
    const view = this.views.get(trainingId)
    const modelId = view?.summary?.model_id
    if (!modelId) {
      this.toast('model id unknown; refresh first')
      return
    }
    try {
      const { training_id } = await this.options.api.resubmit(modelId, { learners })
      this.toast(`resubmitted as ${training_id}`)
      await this.refresh()
      this.open(training_id)
    } catch (err) {
      this.toast(err instanceof ApiError ? `resubmit failed: ${err.message}` : String(err))
    }
  }
}

/** Browser bootstrap (index.html): native fetch + WebSocket. */
export function mount(root: HTMLElement, baseUrl: string, token?: string): Dashboard {
  const api = new ApiClient(baseUrl, token)
  const dashboard = new Dashboard({
    api,
    root,
    socketFactory: (url) => new WebSocket(url) as unknown as import('./stream.js').WebSocketLike,
  })
  dashboard.start()
  return dashboard
}
