import { describe, expect, it } from 'vitest'

import { PointRing } from '../src/ringBuffer.js'

describe('PointRing', () => {
  it('stores points oldest-first', () => {
    const ring = new PointRing(8)
    for (let i = 0; i < 5; i++) ring.push(i, i * 10)
    expect(ring.length).toBe(5)
    expect(ring.toArrays()).toEqual({ xs: [0, 1, 2, 3, 4], ys: [0, 10, 20, 30, 40] })
    expect(ring.at(2)).toEqual({ x: 2, y: 20 })
    expect(ring.lastX()).toBe(4)
  })

  it('bounds memory by evicting the oldest points', () => {
    const ring = new PointRing(4)
    for (let i = 0; i < 10; i++) ring.push(i, i)
    expect(ring.length).toBe(4)
    expect(ring.toArrays().xs).toEqual([6, 7, 8, 9])
  })

  it('default capacity is 10k points', () => {
    const ring = new PointRing()
    expect(ring.capacity).toBe(10_000)
    for (let i = 0; i < 10_500; i++) ring.push(i, i)
    expect(ring.length).toBe(10_000)
    expect(ring.toArrays().xs[0]).toBe(500)
  })

  it('lastX on empty ring is -Infinity', () => {
    expect(new PointRing(2).lastX()).toBe(-Infinity)
  })

  it('clear resets', () => {
    const ring = new PointRing(4)
    ring.push(1, 1)
    ring.clear()
    expect(ring.length).toBe(0)
    expect(ring.toArrays().xs).toEqual([])
  })

  it('rejects out-of-range reads', () => {
    const ring = new PointRing(4)
    ring.push(1, 1)
    expect(() => ring.at(1)).toThrow(RangeError)
  })
})
