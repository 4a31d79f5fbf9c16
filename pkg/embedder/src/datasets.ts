/**
 * Dataset loaders. Samples are yielded in deterministic index order, which
 * fixes both the record order of the output file and the meaning of the
 * skip manifest.
 *
 * Supported:
 *   - cifar10 / cifar10:<dir>  classic binary batches from a local cache
 *     (no downloading here; point CIFAR10_DIR or the suffix at the files)
 *   - dir:<path>               labels.csv (filename,label) plus P6 PPM
 *     images, a dependency-free fixture format
 */

import * as fs from 'fs';
import * as path from 'path';

export interface ImageSample {
  index: number;
  label: number;
  width: number;
  height: number;
  /** RGB, row-major, 3 bytes per pixel */
  pixels: Uint8Array;
}

export interface Dataset {
  name: string;
  split: string;
  classCount: number;
  size: number;
  /** Load one sample; throws on a corrupt image (caller records a skip). */
  sample(index: number): ImageSample;
}

export function parsePpm(buf: Buffer, what: string): { width: number; height: number; pixels: Uint8Array } {
  // P6 <width> <height> <maxval>\n followed by binary RGB
  const text = buf.toString('latin1', 0, Math.min(buf.length, 64));
  if (!text.startsWith('P6')) {
    throw new Error(`${what}: not a P6 PPM`);
  }
  const tokens: string[] = [];
  let pos = 2;
  while (tokens.length < 3 && pos < buf.length) {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (buf[pos] === 0x23) { // '#' comment
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    tokens.push(buf.toString('ascii', start, pos));
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = tokens.map((t) => parseInt(t, 10));
  if (!(width > 0 && height > 0 && maxval === 255)) {
    throw new Error(`${what}: unsupported PPM header (${tokens.join(' ')})`);
  }
  const need = width * height * 3;
  if (buf.length - pos < need) {
    throw new Error(`${what}: truncated pixel data`);
  }
  return { width, height, pixels: new Uint8Array(buf.subarray(pos, pos + need)) };
}

class DirectoryDataset implements Dataset {
  readonly name: string;
  readonly split: string;
  readonly classCount: number;
  readonly size: number;
  private readonly root: string;
  private readonly rows: { file: string; label: number }[];

  constructor(root: string, split: string) {
    this.root = root;
    this.split = split;
    this.name = `dir:${root}`;
    const table = path.join(root, 'labels.csv');
    const lines = fs.readFileSync(table, 'utf-8').trim().split('\n');
    this.rows = lines.slice(1).map((line) => {
      const [file, label] = line.split(',');
      return { file: file.trim(), label: parseInt(label, 10) };
    });
    if (this.rows.length === 0) throw new Error(`${table}: no samples listed`);
    this.classCount = Math.max(...this.rows.map((r) => r.label)) + 1;
    this.size = this.rows.length;
  }

  sample(index: number): ImageSample {
    const row = this.rows[index];
    const buf = fs.readFileSync(path.join(this.root, row.file));
    const img = parsePpm(buf, row.file);
    return { index, label: row.label, ...img };
  }
}

const CIFAR_RECORD = 3073; // 1 label byte + 3x32x32
const CIFAR_BATCHES: Record<string, string[]> = {
  train: ['data_batch_1.bin', 'data_batch_2.bin', 'data_batch_3.bin',
          'data_batch_4.bin', 'data_batch_5.bin'],
  test: ['test_batch.bin'],
};

class Cifar10Dataset implements Dataset {
  readonly name = 'cifar10';
  readonly split: string;
  readonly classCount = 10;
  readonly size: number;
  private readonly buffers: Buffer[];

  constructor(dir: string, split: string) {
    this.split = split;
    const files = CIFAR_BATCHES[split];
    if (!files) throw new Error(`cifar10 has no split ${JSON.stringify(split)}`);
    this.buffers = files.map((f) => {
      const p = path.join(dir, f);
      if (!fs.existsSync(p)) {
        throw new Error(
          `missing ${p}; place the CIFAR-10 binary batches there (no downloads happen here)`,
        );
      }
      return fs.readFileSync(p);
    });
    this.size = this.buffers.reduce((acc, b) => acc + Math.floor(b.length / CIFAR_RECORD), 0);
  }

  sample(index: number): ImageSample {
    let i = index;
    for (const buf of this.buffers) {
      const count = Math.floor(buf.length / CIFAR_RECORD);
      if (i < count) {
        const off = i * CIFAR_RECORD;
        const label = buf[off];
        // stored channel-planar (RRR..GGG..BBB); interleave to RGB
        const pixels = new Uint8Array(32 * 32 * 3);
        for (let p = 0; p < 1024; p++) {
          pixels[3 * p] = buf[off + 1 + p];
          pixels[3 * p + 1] = buf[off + 1 + 1024 + p];
          pixels[3 * p + 2] = buf[off + 1 + 2048 + p];
        }
        return { index, label, width: 32, height: 32, pixels };
      }
      i -= count;
    }
    throw new Error(`index ${index} out of range`);
  }
}

export function openDataset(spec: string, split: string): Dataset {
  if (spec.startsWith('dir:')) {
    return new DirectoryDataset(spec.slice(4), split);
  }
  if (spec === 'cifar10' || spec.startsWith('cifar10:')) {
    const dir = spec.includes(':')
      ? spec.slice('cifar10:'.length)
      : process.env.CIFAR10_DIR ?? path.join('data', 'cifar10');
    return new Cifar10Dataset(dir, split);
  }
  throw new Error(`unknown dataset ${JSON.stringify(spec)} (use cifar10 or dir:<path>)`);
}
