/**
 * Fixed-capacity ring of (x, y) points backed by typed arrays.
 * Series buffers are bounded (default 10k points) so week-long jobs
 * cannot grow the tab's memory without bound.
 */
export class PointRing {
  private readonly xs: Float64Array
  private readonly ys: Float64Array
  private head = 0 // next write slot
  private count = 0

  constructor(readonly capacity: number = 10_000) {
    this.xs = new Float64Array(capacity)
    this.ys = new Float64Array(capacity)
  }

  get length(): number {
    return this.count
  }

  push(x: number, y: number): void {
    this.xs[this.head] = x
    this.ys[this.head] = y
    this.head = (this.head + 1) % this.capacity
    if (this.count < this.capacity) this.count++
  }

  /** Last appended x, or -Infinity when empty (append-only ordering guard). */
  lastX(): number {
    if (this.count === 0) return -Infinity
    const idx = (this.head - 1 + this.capacity) % this.capacity
    return this.xs[idx]
  }

  at(i: number): { x: number; y: number } {
    if (i < 0 || i >= this.count) throw new RangeError(`index ${i} of ${this.count}`)
    const start = (this.head - this.count + this.capacity) % this.capacity
    const idx = (start + i) % this.capacity
    return { x: this.xs[idx], y: this.ys[idx] }
  }

  /** Snapshot oldest-first (allocates; for render passes and tests). */
  toArrays(): { xs: number[]; ys: number[] } {
    const xs = new Array<number>(this.count)
    const ys = new Array<number>(this.count)
    const start = (this.head - this.count + this.capacity) % this.capacity
    for (let i = 0; i < this.count; i++) {
      const idx = (start + i) % this.capacity
      xs[i] = this.xs[idx]
      ys[i] = this.ys[idx]
    }
    return { xs, ys }
  }

  clear(): void {
    this.head = 0
    this.count = 0
  }
}
