/**
 * Pure geometry for the time-series chart: data-to-pixel scales, zoom
 * windows, nearest-point hover lookup. Kept canvas-free so the math is
 * unit-testable.
 */

export interface Viewport {
  width: number
  height: number
  padLeft: number
  padRight: number
  padTop: number
  padBottom: number
}

export interface Range {
  min: number
  max: number
}

export interface ZoomState {
  /** x-range currently shown, or null for fit-all */
  xWindow: Range | null
}

export function dataRange(values: readonly number[]): Range {
  if (values.length === 0) return { min: 0, max: 1 }
  let min = Infinity
  let max = -Infinity
  for (const v of values) {
    if (v < min) min = v
    if (v > max) max = v
  }
  if (min === max) {
    min -= 0.5
    max += 0.5
  }
  return { min, max }
}

export function clampWindow(window: Range, bounds: Range): Range {
  const width = Math.min(window.max - window.min, bounds.max - bounds.min)
  let min = Math.max(window.min, bounds.min)
  let max = min + width
  if (max > bounds.max) {
    max = bounds.max
    min = max - width
  }
  return { min, max }
}

/** Wheel zoom around an anchor point; factor < 1 zooms in. */
export function zoomWindow(current: Range, anchor: number, factor: number, bounds: Range): Range {
  const span = (current.max - current.min) * factor
  const ratio = (anchor - current.min) / (current.max - current.min)
  const proposed = { min: anchor - span * ratio, max: anchor + span * (1 - ratio) }
  return clampWindow(proposed, bounds)
}

export function xToPixel(x: number, range: Range, vp: Viewport): number {
  const plot = vp.width - vp.padLeft - vp.padRight
  return vp.padLeft + ((x - range.min) / (range.max - range.min)) * plot
}

export function yToPixel(y: number, range: Range, vp: Viewport): number {
  const plot = vp.height - vp.padTop - vp.padBottom
  return vp.padTop + (1 - (y - range.min) / (range.max - range.min)) * plot
}

export function pixelToX(px: number, range: Range, vp: Viewport): number {
  const plot = vp.width - vp.padLeft - vp.padRight
  return range.min + ((px - vp.padLeft) / plot) * (range.max - range.min)
}

export interface PathPoint {
  px: number
  py: number
  x: number
  y: number
}

/** Project (xs, ys) into pixel space, filtering to the visible window. */
export function projectSeries(
  xs: readonly number[],
  ys: readonly number[],
  xRange: Range,
  yRange: Range,
  vp: Viewport,
): PathPoint[] {
  const out: PathPoint[] = []
  for (let i = 0; i < xs.length; i++) {
    if (xs[i] < xRange.min || xs[i] > xRange.max) continue
    out.push({
      px: xToPixel(xs[i], xRange, vp),
      py: yToPixel(ys[i], yRange, vp),
      x: xs[i],
      y: ys[i],
    })
  }
  return out
}

/** Nearest projected point to a pixel x (hover readout), or null. */
export function nearestPoint(points: readonly PathPoint[], px: number): PathPoint | null {
  let best: PathPoint | null = null
  let bestDist = Infinity
  for (const point of points) {
    const dist = Math.abs(point.px - px)
    if (dist < bestDist) {
      bestDist = dist
      best = point
    }
  }
  return best
}
