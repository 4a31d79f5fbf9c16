import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { FastembWriter, readStore, writeStore } from '../src/fastemb';

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), 'fastemb-'));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe('FASTEMB1 writer', () => {
  it('produces the exact byte layout for a minimal store', () => {
    const file = path.join(dir, 'one.femb');
    writeStore(file, 2, [0], [Float32Array.of(0)]);
    const buf = fs.readFileSync(file);
    expect(buf.length).toBe(8 + 12 + 8);
    expect(buf.toString('ascii', 0, 8)).toBe('FASTEMB1');
    expect(buf.readUInt32LE(8)).toBe(1); // n
    expect(buf.readUInt32LE(12)).toBe(1); // d
    expect(buf.readUInt32LE(16)).toBe(2); // c
    expect(buf.readUInt32LE(20)).toBe(0); // label
    expect(buf.readFloatLE(24)).toBe(0);
  });

  it('round-trips labels and features through the reader', () => {
    const file = path.join(dir, 'rt.femb');
    const labels = [2, 0, 1, 2];
    const feats = labels.map((_, i) => Float32Array.of(i + 0.5, -i, i * i));
    writeStore(file, 3, labels, feats);
    const store = readStore(file);
    expect(store.header).toEqual({ n: 4, d: 3, c: 3 });
    expect(store.labels).toEqual(labels);
    store.features.forEach((f, i) => expect(Array.from(f)).toEqual(Array.from(feats[i])));
  });

  it('patches the sample count on close', () => {
    const file = path.join(dir, 'count.femb');
    const writer = new FastembWriter(file, 2, 2);
    writer.append(0, Float32Array.of(1, 2));
    writer.append(1, Float32Array.of(3, 4));
    writer.append(1, Float32Array.of(5, 6));
    expect(writer.close()).toBe(3);
    expect(readStore(file).header.n).toBe(3);
  });

  it('rejects out-of-range labels and wrong widths', () => {
    const file = path.join(dir, 'bad.femb');
    const writer = new FastembWriter(file, 2, 2);
    expect(() => writer.append(2, Float32Array.of(1, 2))).toThrow(/out of range/);
    expect(() => writer.append(0, Float32Array.of(1))).toThrow(/feature length/);
    writer.append(0, Float32Array.of(1, 2));
    writer.close();
  });

  it('refuses empty stores', () => {
    const file = path.join(dir, 'empty.femb');
    const writer = new FastembWriter(file, 1, 2);
    expect(() => writer.close()).toThrow(/empty store/);
  });

  it('reader rejects truncated and trailing-byte files', () => {
    const file = path.join(dir, 'cut.femb');
    writeStore(file, 2, [0, 1], [Float32Array.of(1), Float32Array.of(2)]);
    const whole = fs.readFileSync(file);
    fs.writeFileSync(file, whole.subarray(0, whole.length - 2));
    expect(() => readStore(file)).toThrow(/truncated/);
    fs.writeFileSync(file, Buffer.concat([whole, Buffer.of(0)]));
    expect(() => readStore(file)).toThrow(/trailing/);
  });
});
