/**
 * Canvas line chart for one metric: every stream frame re-renders, the
 * mouse shows the exact (iteration, value) under the cursor, and the
 * wheel zooms the x-window so anomalies (sudden drops, plateaus) can be
 * inspected up close. Double-click resets to fit-all.
 */

import {
  clampWindow,
  dataRange,
  nearestPoint,
  pixelToX,
  projectSeries,
  zoomWindow,
  type PathPoint,
  type Range,
  type Viewport,
} from './chartMath.js'
import type { SeriesStore, MetricName } from './series.js'

const COLORS = ['#2563eb', '#dc2626', '#059669', '#d97706', '#7c3aed', '#0891b2', '#be185d', '#4d7c0f']

export class MetricChart {
  private readonly ctx: CanvasRenderingContext2D | null
  private readonly vp: Viewport
  private xWindow: Range | null = null
  private hoverPx: number | null = null
  private lastPoints: PathPoint[][] = []

  constructor(
    canvas: HTMLCanvasElement,
    private readonly series: SeriesStore,
    private readonly metric: MetricName,
    private readonly label: string,
  ) {
    this.ctx = canvas.getContext('2d')
    this.vp = {
      width: canvas.width,
      height: canvas.height,
      padLeft: 48,
      padRight: 12,
      padTop: 16,
      padBottom: 24,
    }
    canvas.addEventListener('mousemove', (ev) => {
      const rect = canvas.getBoundingClientRect()
      this.hoverPx = ((ev.clientX - rect.left) / rect.width) * canvas.width
      this.render()
    })
    canvas.addEventListener('mouseleave', () => {
      this.hoverPx = null
      this.render()
    })
    canvas.addEventListener('wheel', (ev) => {
      ev.preventDefault()
      const bounds = this.xBounds()
      const current = this.xWindow ?? bounds
      const rect = canvas.getBoundingClientRect()
      const px = ((ev.clientX - rect.left) / rect.width) * canvas.width
      const anchor = pixelToX(px, current, this.vp)
      const factor = ev.deltaY > 0 ? 1.25 : 0.8
      this.xWindow = zoomWindow(current, anchor, factor, bounds)
      this.render()
    })
    canvas.addEventListener('dblclick', () => {
      this.xWindow = null
      this.render()
    })
  }

  private xBounds(): Range {
    const all: number[] = []
    for (const learner of this.series.learners()) {
      const { xs } = this.series.points(learner, this.metric)
      if (xs.length) {
        all.push(xs[0], xs[xs.length - 1])
      }
    }
    return dataRange(all)
  }

  render(): void {
    const ctx = this.ctx
    if (!ctx) return
    const { width, height, padLeft, padTop, padBottom } = this.vp
    ctx.clearRect(0, 0, width, height)
    const learners = this.series.learners()
    if (learners.length === 0) {
      ctx.fillStyle = '#6b7280'
      ctx.font = '13px sans-serif'
      ctx.fillText(`${this.label}: waiting for metrics...`, padLeft, height / 2)
      return
    }
    const bounds = this.xBounds()
    const xRange = this.xWindow ? clampWindow(this.xWindow, bounds) : bounds
    const visibleYs: number[] = []
    const perLearner = learners.map((learner) => this.series.points(learner, this.metric))
    for (const { xs, ys } of perLearner) {
      for (let i = 0; i < xs.length; i++) {
        if (xs[i] >= xRange.min && xs[i] <= xRange.max) visibleYs.push(ys[i])
      }
    }
    const yRange = dataRange(visibleYs)

    // axes
    ctx.strokeStyle = '#d1d5db'
    ctx.beginPath()
    ctx.moveTo(padLeft, padTop)
    ctx.lineTo(padLeft, height - padBottom)
    ctx.lineTo(width - this.vp.padRight, height - padBottom)
    ctx.stroke()
    ctx.fillStyle = '#6b7280'
    ctx.font = '11px sans-serif'
    ctx.fillText(yRange.max.toPrecision(4), 4, padTop + 8)
    ctx.fillText(yRange.min.toPrecision(4), 4, height - padBottom)
    ctx.fillText(String(Math.round(xRange.min)), padLeft, height - 8)
    ctx.fillText(String(Math.round(xRange.max)), width - 60, height - 8)
    ctx.fillText(this.label, width / 2 - 20, 12)

    this.lastPoints = []
    learners.forEach((learner, idx) => {
      const { xs, ys } = perLearner[idx]
      const points = projectSeries(xs, ys, xRange, yRange, this.vp)
      this.lastPoints.push(points)
      if (points.length === 0) return
      ctx.strokeStyle = COLORS[learner % COLORS.length]
      ctx.beginPath()
      ctx.moveTo(points[0].px, points[0].py)
      for (const point of points) ctx.lineTo(point.px, point.py)
      ctx.stroke()
    })

    if (this.hoverPx !== null) {
      const flat = this.lastPoints.flat()
      const hit = nearestPoint(flat, this.hoverPx)
      if (hit) {
        ctx.fillStyle = '#111827'
        ctx.beginPath()
        ctx.arc(hit.px, hit.py, 3, 0, 2 * Math.PI)
        ctx.fill()
        ctx.font = '12px sans-serif'
        ctx.fillText(`iter ${hit.x}  ${this.label} ${hit.y.toPrecision(6)}`, padLeft + 8, padTop + 10)
      }
    }
  }
}
