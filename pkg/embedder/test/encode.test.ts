import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { openDataset, parsePpm } from '../src/datasets';
import { RandomProjectionEncoder, resolveEncoder } from '../src/encoders';
import { encode } from '../src/encode';
import { readStore } from '../src/fastemb';
import { makeFixtureDataset, writePpm } from './helpers';

let dir: string;
let fixture: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), 'encode-'));
  fixture = path.join(dir, 'imgs');
  makeFixtureDataset(fixture);
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe('datasets', () => {
  it('parses P6 PPM images', () => {
    const file = path.join(dir, 'probe.ppm');
    writePpm(file, 4, 3, [10, 20, 30]);
    const img = parsePpm(fs.readFileSync(file), 'probe.ppm');
    expect(img.width).toBe(4);
    expect(img.height).toBe(3);
    expect(img.pixels.length).toBe(36);
    expect(img.pixels[0]).toBe(10);
  });

  it('loads the directory fixture in labels.csv order', () => {
    const ds = openDataset(`dir:${fixture}`, 'train');
    expect(ds.size).toBe(10);
    expect(ds.classCount).toBe(2);
    for (let i = 0; i < 10; i++) {
      const sample = ds.sample(i);
      expect(sample.index).toBe(i);
      expect(sample.label).toBe(i < 5 ? 0 : 1);
    }
  });

  it('rejects unknown dataset specs and splits', () => {
    expect(() => openDataset('imagenet', 'train')).toThrow(/unknown dataset/);
    expect(() => openDataset('cifar10:/nonexistent', 'val')).toThrow(/no split/);
    expect(() => openDataset('cifar10:/nonexistent', 'train')).toThrow(/missing/);
  });
});

describe('encoders', () => {
  it('random projection is deterministic and has the requested width', async () => {
    const enc = new RandomProjectionEncoder(24);
    expect(await enc.dim()).toBe(24);
    const ds = openDataset(`dir:${fixture}`, 'train');
    const a = await enc.encodeBatch([ds.sample(3)]);
    const b = await new RandomProjectionEncoder(24).encodeBatch([ds.sample(3)]);
    expect(Array.from(a[0])).toEqual(Array.from(b[0]));
  });

  it('resolves the five pretrained names and randproj dims', () => {
    for (const name of ['siglip', 'clip', 'evaclip', 'dinov2', 'resnet50']) {
      expect(resolveEncoder(name).name).toBe(name);
      expect(resolveEncoder(name).checkpoint).toContain('/');
    }
    expect(resolveEncoder('randproj12').name).toBe('randproj12');
    expect(() => resolveEncoder('vgg')).toThrow(/unknown encoder/);
  });
});

describe('encode', () => {
  const job = (out: string, encoder = 'randproj16') => ({
    dataset: `dir:${fixture}`,
    split: 'train',
    encoder,
    batchSize: 4,
    out,
  });

  it('writes n, d, and labels in dataset index order', async () => {
    const out = path.join(dir, 'fix.femb');
    const result = await encode(job(out));
    expect(result.written).toBe(10);
    expect(result.dim).toBe(16);
    expect(result.skipped).toEqual([]);
    const store = readStore(out);
    expect(store.header).toEqual({ n: 10, d: 16, c: 2 });
    expect(store.labels).toEqual([0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
  });

  it('is byte-identical across repeated runs', async () => {
    const a = path.join(dir, 'a.femb');
    const b = path.join(dir, 'b.femb');
    await encode(job(a));
    await encode(job(b));
    expect(fs.readFileSync(a).equals(fs.readFileSync(b))).toBe(true);
  });

  it('skips undecodable images and lists them in the manifest', async () => {
    fs.writeFileSync(path.join(fixture, 'img_3.ppm'), Buffer.from('not an image'));
    fs.writeFileSync(path.join(fixture, 'img_7.ppm'), Buffer.from('P6\n999 999\n255\n'));
    const out = path.join(dir, 'skips.femb');
    const result = await encode(job(out));
    expect(result.written).toBe(8);
    expect(result.skipped).toEqual([3, 7]);
    const manifest = JSON.parse(fs.readFileSync(result.manifestPath, 'utf-8'));
    expect(manifest.skipped).toEqual([3, 7]);
    expect(manifest.checkpoint).toContain('randproj');
    const store = readStore(out);
    expect(store.header.n).toBe(8);
    expect(store.labels).toEqual([0, 0, 0, 0, 1, 1, 1, 1]);
  });

  it('separates the two fixture classes linearly in embedding space', async () => {
    // nearest-centroid check: the projection keeps the color split intact
    const out = path.join(dir, 'sep.femb');
    await encode(job(out, 'randproj32'));
    const store = readStore(out);
    const centroid = (cls: number) => {
      const members = store.features.filter((_, i) => store.labels[i] === cls);
      const acc = new Float64Array(store.header.d);
      members.forEach((f) => f.forEach((v, j) => (acc[j] += v / members.length)));
      return acc;
    };
    const c0 = centroid(0);
    const c1 = centroid(1);
    let correct = 0;
    store.features.forEach((f, i) => {
      let d0 = 0;
      let d1 = 0;
      f.forEach((v, j) => {
        d0 += (v - c0[j]) ** 2;
        d1 += (v - c1[j]) ** 2;
      });
      if ((d0 < d1 ? 0 : 1) === store.labels[i]) correct += 1;
    });
    expect(correct).toBe(10);
  });

  it('pretrained encoders fail with a clear message when weights are absent', async () => {
    const out = path.join(dir, 'noweights.femb');
    await expect(encode(job(out, 'siglip'))).rejects.toThrow(
      /transformers|missing weights/,
    );
  });
});
