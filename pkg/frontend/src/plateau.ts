/**
 * Plateau detection on an accuracy series: the badge turns on when the
 * best value of the trailing window no longer beats the best value seen
 * before it by at least epsilon.
 */

export const DEFAULT_WINDOW = 200
export const DEFAULT_EPSILON = 0.002

export function plateauIndicator(
  values: readonly number[],
  window: number = DEFAULT_WINDOW,
  epsilon: number = DEFAULT_EPSILON,
): boolean {
  if (values.length < window + 1) return false // nothing before the window yet
  const split = values.length - window
  let maxBefore = -Infinity
  for (let i = 0; i < split; i++) if (values[i] > maxBefore) maxBefore = values[i]
  let maxWindow = -Infinity
  for (let i = split; i < values.length; i++) if (values[i] > maxWindow) maxWindow = values[i]
  return maxWindow - maxBefore < epsilon
}

/** First series length at which the badge turns on, or -1 (test fixtures). */
export function plateauOnsetLength(
  values: readonly number[],
  window: number = DEFAULT_WINDOW,
  epsilon: number = DEFAULT_EPSILON,
): number {
  for (let length = 1; length <= values.length; length++) {
    if (plateauIndicator(values.slice(0, length), window, epsilon)) return length
  }
  return -1
}
