// Latest-wins throttling for the interpolation slider: at most one request
// per interval, always ending on the newest value; stale responses are
// dropped.

export interface LatestWins<T> {
  (value: T): void;
  flushTimer(): void;
}

export function latestWins<T>(
  issue: (value: T, isCurrent: () => boolean) => void,
  minIntervalMs = 100,
  now: () => number = () => Date.now(),
  schedule: (fn: () => void, ms: number) => unknown = (fn, ms) => setTimeout(fn, ms),
): LatestWins<T> {
  let lastIssued = -Infinity;
  let pending: { value: T } | null = null;
  let timerActive = false;
  let seq = 0;

  const fire = (value: T) => {
    lastIssued = now();
    seq += 1;
    const mySeq = seq;
    issue(value, () => mySeq === seq);
  };

  const drain = () => {
    timerActive = false;
    if (pending !== null) {
      const { value } = pending;
      pending = null;
      fire(value);
    }
  };

  const call = (value: T) => {
    const wait = lastIssued + minIntervalMs - now();
    if (wait <= 0 && !timerActive) {
      fire(value);
      return;
    }
    pending = { value };
    if (!timerActive) {
      timerActive = true;
      schedule(drain, Math.max(wait, 0));
    }
  };
  call.flushTimer = drain;
  return call;
}
