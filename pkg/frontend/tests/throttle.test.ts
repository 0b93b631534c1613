import { describe, expect, it } from "vitest";

import { latestWins } from "../src/throttle.js";

describe("latestWins", () => {
  it("issues immediately when idle", () => {
    const issued: number[] = [];
    let clock = 0;
    const call = latestWins<number>((v) => issued.push(v), 100, () => clock, () => 0);
    call(0.5);
    expect(issued).toEqual([0.5]);
  });

  it("caps the request rate and always ends on the newest value", () => {
    const issued: number[] = [];
    let clock = 0;
    let timers: Array<{ at: number; fn: () => void }> = [];
    const runDueTimers = () => {
      const due = timers.filter((t) => t.at <= clock);
      timers = timers.filter((t) => t.at > clock);
      for (const t of due) t.fn();
    };
    const call = latestWins<number>(
      (v) => issued.push(v),
      100,
      () => clock,
      (fn, ms) => timers.push({ at: clock + ms, fn }),
    );

    // 30 slider moves over one second.
    for (let i = 0; i < 30; i++) {
      clock = Math.floor((i * 1000) / 30);
      runDueTimers();
      call(i / 29);
    }
    clock = 2000;
    runDueTimers();

    expect(issued.length).toBeLessThanOrEqual(11);
    expect(issued[issued.length - 1]).toBe(1);
  });

  it("drops stale responses via the isCurrent flag", () => {
    const flags: Array<() => boolean> = [];
    let clock = 0;
    const call = latestWins<number>((_v, isCurrent) => flags.push(isCurrent), 0, () => clock, () => 0);
    call(0.1);
    call(0.2);
    expect(flags.length).toBe(2);
    expect(flags[0]!()).toBe(false); // superseded
    expect(flags[1]!()).toBe(true);
  });
});
