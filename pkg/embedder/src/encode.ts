/**
 * Encoding jobs: stream a dataset through a frozen encoder into a
 * FASTEMB1 file, in dataset index order, with a sidecar manifest that
 * records the checkpoint identifier and any skipped (undecodable) samples.
 */

import * as fs from 'fs';

import { Dataset, ImageSample, openDataset } from './datasets';
import { Encoder, resolveEncoder } from './encoders';
import { FastembWriter } from './fastemb';

export interface EncodeJob {
  dataset: string;
  split: string;
  encoder: string;
  batchSize: number;
  out: string;
}

export interface EncodeResult {
  written: number;
  skipped: number[];
  dim: number;
  manifestPath: string;
}

export async function encode(
  job: EncodeJob,
  encoderOverride?: Encoder,
  datasetOverride?: Dataset,
): Promise<EncodeResult> {
  if (job.batchSize < 1) throw new Error('batch size must be at least 1');
  const dataset = datasetOverride ?? openDataset(job.dataset, job.split);
  const encoder = encoderOverride ?? resolveEncoder(job.encoder);
  const dim = await encoder.dim();

  const writer = new FastembWriter(job.out, dim, dataset.classCount);
  const skipped: number[] = [];
  let batch: ImageSample[] = [];

  const flush = async () => {
    if (!batch.length) return;
    const vectors = await encoder.encodeBatch(batch);
    for (let i = 0; i < batch.length; i++) {
      writer.append(batch[i].label, vectors[i]);
    }
    batch = [];
  };

  for (let index = 0; index < dataset.size; index++) {
    let sample: ImageSample;
    try {
      sample = dataset.sample(index);
    } catch (err) {
      skipped.push(index);
      continue;
    }
    batch.push(sample);
    if (batch.length >= job.batchSize) {
      await flush();
    }
  }
  await flush();
  const written = writer.close();

  const manifestPath = `${job.out}.manifest.json`;
  const manifest = {
    dataset: dataset.name,
    split: dataset.split,
    encoder: encoder.name,
    checkpoint: encoder.checkpoint,
    dim,
    written,
    skipped,
  };
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + '\n');
  return { written, skipped, dim, manifestPath };
}
