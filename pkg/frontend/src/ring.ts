/** Fixed-capacity circular buffer for streaming plot data. */
export class RingBuffer<T> {
  private buffer: T[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
    this.buffer = new Array(capacity);
  }

  push(item: T): void {
    this.buffer[this.head] = item;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count++;
  }

  get size(): number {
    return this.count;
  }

  get(index: number): T | undefined {
    if (index < 0 || index >= this.count) return undefined;
    const start = (this.head - this.count + this.capacity * 2) % this.capacity;
    return this.buffer[(start + index) % this.capacity];
  }

  last(): T | undefined {
    return this.count ? this.get(this.count - 1) : undefined;
  }

  toArray(): T[] {
    const out: T[] = [];
    for (let i = 0; i < this.count; i++) out.push(this.get(i)!);
    return out;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }
}
