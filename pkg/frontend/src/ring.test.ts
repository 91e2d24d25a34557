import { describe, expect, it } from "vitest";
import { RingBuffer } from "./ring.js";

describe("RingBuffer", () => {
  it("keeps insertion order below capacity", () => {
    const buf = new RingBuffer<number>(4);
    [1, 2, 3].forEach((x) => buf.push(x));
    expect(buf.toArray()).toEqual([1, 2, 3]);
    expect(buf.size).toBe(3);
    expect(buf.last()).toBe(3);
  });

  it("never exceeds capacity and drops the oldest", () => {
    const buf = new RingBuffer<number>(3);
    for (let i = 0; i < 10; i++) {
      buf.push(i);
      expect(buf.size).toBeLessThanOrEqual(3);
    }
    expect(buf.toArray()).toEqual([7, 8, 9]);
  });

  it("indexes oldest-first", () => {
    const buf = new RingBuffer<string>(2);
    buf.push("a");
    buf.push("b");
    buf.push("c");
    expect(buf.get(0)).toBe("b");
    expect(buf.get(1)).toBe("c");
    expect(buf.get(2)).toBeUndefined();
    expect(buf.get(-1)).toBeUndefined();
  });

  it("clears", () => {
    const buf = new RingBuffer<number>(2);
    buf.push(1);
    buf.clear();
    expect(buf.size).toBe(0);
    expect(buf.toArray()).toEqual([]);
  });

  it("rejects nonpositive capacity", () => {
    expect(() => new RingBuffer(0)).toThrow();
  });
});
