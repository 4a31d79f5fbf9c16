/**
 * Cross-component round trip: files written here must load in the core
 * simulator through its public surfaces (`fast inspect` and the Python
 * loader). Skipped when the core package is not importable.
 */

import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { encode } from '../src/encode';
import { makeFixtureDataset } from './helpers';

function corePresent(): boolean {
  try {
    execFileSync('python3', ['-c', 'import fastfal'], { stdio: 'pipe' });
    return true;
  } catch {
    return false;
  }
}

const HAVE_CORE = corePresent();
let dir: string;
let out: string;

beforeAll(async () => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), 'roundtrip-'));
  const fixture = path.join(dir, 'imgs');
  makeFixtureDataset(fixture);
  out = path.join(dir, 'fixture.femb');
  await encode({
    dataset: `dir:${fixture}`,
    split: 'train',
    encoder: 'randproj16',
    batchSize: 4,
    out,
  });
});

afterAll(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe.skipIf(!HAVE_CORE)('core round trip', () => {
  it('fast inspect accepts the emitted file', () => {
    const stdout = execFileSync('python3', ['-m', 'fastfal.cli', 'inspect', out], {
      encoding: 'utf-8',
    });
    expect(stdout).toContain('n=10 d=16 c=2');
    expect(stdout).toContain('class 0: 5');
    expect(stdout).toContain('class 1: 5');
  });

  it('the core loader returns matching n, d, and labels', () => {
    const script = [
      'import sys, json',
      'from fastfal.datastore import load_store',
      'store = load_store(sys.argv[1])',
      'print(json.dumps({"n": store.n, "d": store.d, "c": store.c,',
      '                  "labels": store.labels.tolist()}))',
    ].join('\n');
    const stdout = execFileSync('python3', ['-c', script, out], { encoding: 'utf-8' });
    const parsed = JSON.parse(stdout);
    expect(parsed.n).toBe(10);
    expect(parsed.d).toBe(16);
    expect(parsed.c).toBe(2);
    expect(parsed.labels).toEqual([0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
  });

  it('a two-pass simulator run trains on the emitted embeddings', () => {
    const cfgPath = path.join(dir, 'exp.cfg');
    const outDir = path.join(dir, 'run');
    fs.writeFileSync(cfgPath, [
      `data.path = ${out}`,
      'data.test_fraction = 0.2',
      'partition.mode = iid',
      'partition.clients = 2',
      'al.method = fast',
      'al.budget_fraction = 0.5',
      'al.initial_fraction = 0.25',
      'al.k_nn = 1',
      'fl.rounds = 5',
      'fl.eta = 0.1',
      'seed = 3',
      '',
    ].join('\n'));
    const stdout = execFileSync(
      'python3',
      ['-m', 'fastfal.cli', 'run', '--config', cfgPath, '--out', outDir],
      { encoding: 'utf-8' },
    );
    expect(stdout).toContain('final_acc=');
    expect(fs.existsSync(path.join(outDir, 'metrics.csv'))).toBe(true);
  });
});
