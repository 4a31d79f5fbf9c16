/**
 * FASTEMB1 binary format: writer and reader.
 *
 * Layout (little-endian, no padding, no trailing bytes):
 *   bytes 0..7  ASCII magic "FASTEMB1"
 *   u32 n, u32 d, u32 c
 *   n records of [u32 label][d x f32 feature]
 *
 * The sample id of a record is its index in the file.
 */

import * as fs from 'fs';

export const MAGIC = 'FASTEMB1';
export const HEADER_BYTES = 8 + 12;

export interface StoreHeader {
  n: number;
  d: number;
  c: number;
}

export class FastembWriter {
  private readonly fd: number;
  private readonly d: number;
  private readonly c: number;
  private written = 0;
  private closed = false;

  constructor(path: string, d: number, c: number) {
    if (d < 1 || c < 2) {
      throw new Error(`invalid header: d=${d} c=${c}`);
    }
    this.d = d;
    this.c = c;
    this.fd = fs.openSync(path, 'w');
    // placeholder header, patched with the final n on close
    const header = Buffer.alloc(HEADER_BYTES);
    header.write(MAGIC, 0, 'ascii');
    header.writeUInt32LE(0, 8);
    header.writeUInt32LE(d, 12);
    header.writeUInt32LE(c, 16);
    fs.writeSync(this.fd, header);
  }

  append(label: number, features: Float32Array): void {
    if (this.closed) throw new Error('writer already closed');
    if (!Number.isInteger(label) || label < 0 || label >= this.c) {
      throw new Error(`label ${label} out of range for c=${this.c}`);
    }
    if (features.length !== this.d) {
      throw new Error(`feature length ${features.length}, expected d=${this.d}`);
    }
    const record = Buffer.alloc(4 + 4 * this.d);
    record.writeUInt32LE(label, 0);
    for (let i = 0; i < this.d; i++) {
      record.writeFloatLE(features[i], 4 + 4 * i);
    }
    fs.writeSync(this.fd, record);
    this.written += 1;
  }

  close(): number {
    if (this.closed) return this.written;
    const n = Buffer.alloc(4);
    n.writeUInt32LE(this.written, 0);
    fs.writeSync(this.fd, n, 0, 4, 8);
    fs.closeSync(this.fd);
    this.closed = true;
    if (this.written < 1) {
      throw new Error('refusing to finish an empty store (n must be >= 1)');
    }
    return this.written;
  }
}

export function writeStore(
  path: string,
  c: number,
  labels: number[],
  features: Float32Array[],
): number {
  if (labels.length !== features.length) {
    throw new Error('labels and features must align');
  }
  if (features.length === 0) {
    throw new Error('refusing to write an empty store');
  }
  const writer = new FastembWriter(path, features[0].length, c);
  for (let i = 0; i < labels.length; i++) {
    writer.append(labels[i], features[i]);
  }
  return writer.close();
}

export function readHeader(buf: Buffer): StoreHeader {
  if (buf.length < HEADER_BYTES) {
    throw new Error('file too short for a FASTEMB1 header');
  }
  if (buf.toString('ascii', 0, 8) !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString('ascii', 0, 8))}`);
  }
  return {
    n: buf.readUInt32LE(8),
    d: buf.readUInt32LE(12),
    c: buf.readUInt32LE(16),
  };
}

export interface Store {
  header: StoreHeader;
  labels: number[];
  features: Float32Array[];
}

export function readStore(path: string): Store {
  const buf = fs.readFileSync(path);
  const header = readHeader(buf);
  const { n, d, c } = header;
  const expected = HEADER_BYTES + n * (4 + 4 * d);
  if (buf.length < expected) {
    throw new Error(`payload truncated: expected ${expected} bytes, got ${buf.length}`);
  }
  if (buf.length > expected) {
    throw new Error(`${buf.length - expected} trailing bytes`);
  }
  const labels: number[] = [];
  const features: Float32Array[] = [];
  for (let i = 0; i < n; i++) {
    const off = HEADER_BYTES + i * (4 + 4 * d);
    const label = buf.readUInt32LE(off);
    if (label >= c) throw new Error(`record ${i}: label ${label} out of range`);
    labels.push(label);
    const feat = new Float32Array(d);
    for (let j = 0; j < d; j++) {
      feat[j] = buf.readFloatLE(off + 4 + 4 * j);
    }
    features.push(feat);
  }
  return { header, labels, features };
}
