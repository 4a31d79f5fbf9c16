/**
 * Frozen image encoders.
 *
 * The five pretrained encoders run through transformers.js when the
 * package and its cached weights are available; nothing is downloaded
 * implicitly, so on an offline box they fail with a clear missing-weights
 * error. `randproj<dim>` is a deterministic, dependency-free encoder
 * (seeded random projection of mean-pooled pixel patches) meant for
 * fixtures and plumbing tests, not for representation quality.
 */

import { ImageSample } from './datasets';

export interface Encoder {
  name: string;
  /** checkpoint identifier recorded in the sidecar manifest */
  checkpoint: string;
  dim(): Promise<number>;
  encodeBatch(images: ImageSample[]): Promise<Float32Array[]>;
}

export const PRETRAINED: Record<string, string> = {
  siglip: 'Xenova/siglip-base-patch16-224',
  clip: 'Xenova/clip-vit-base-patch32',
  evaclip: 'Xenova/EVA02-base-patch16-clip-224',
  dinov2: 'Xenova/dinov2-base',
  resnet50: 'Xenova/resnet-50',
};

/** Deterministic 32-bit PRNG (mulberry32). */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function hashName(name: string): number {
  let h = 2166136261;
  for (let i = 0; i < name.length; i++) {
    h = Math.imul(h ^ name.charCodeAt(i), 16777619);
  }
  return h >>> 0;
}

const GRID = 8; // pooling grid, 8x8 patches x 3 channels = 192 raw stats

export class RandomProjectionEncoder implements Encoder {
  readonly name: string;
  readonly checkpoint: string;
  private readonly outDim: number;
  private readonly projection: Float64Array;

  constructor(outDim: number) {
    if (!(outDim >= 1)) throw new Error(`bad projection dim ${outDim}`);
    this.outDim = outDim;
    this.name = `randproj${outDim}`;
    this.checkpoint = `randproj-v1-grid${GRID}-dim${outDim}`;
    const rand = mulberry32(hashName(this.checkpoint));
    const inDim = GRID * GRID * 3;
    this.projection = new Float64Array(inDim * outDim);
    for (let i = 0; i < this.projection.length; i++) {
      // Box-Muller for a Gaussian projection
      const u = Math.max(rand(), 1e-12);
      const v = rand();
      this.projection[i] = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
    }
  }

  async dim(): Promise<number> {
    return this.outDim;
  }

  private pool(img: ImageSample): Float64Array {
    const stats = new Float64Array(GRID * GRID * 3);
    const counts = new Float64Array(GRID * GRID);
    for (let y = 0; y < img.height; y++) {
      const gy = Math.min(GRID - 1, Math.floor((y * GRID) / img.height));
      for (let x = 0; x < img.width; x++) {
        const gx = Math.min(GRID - 1, Math.floor((x * GRID) / img.width));
        const cell = gy * GRID + gx;
        const p = 3 * (y * img.width + x);
        stats[3 * cell] += img.pixels[p] / 255;
        stats[3 * cell + 1] += img.pixels[p + 1] / 255;
        stats[3 * cell + 2] += img.pixels[p + 2] / 255;
        counts[cell] += 1;
      }
    }
    for (let cell = 0; cell < counts.length; cell++) {
      const c = Math.max(counts[cell], 1);
      stats[3 * cell] /= c;
      stats[3 * cell + 1] /= c;
      stats[3 * cell + 2] /= c;
    }
    return stats;
  }

  async encodeBatch(images: ImageSample[]): Promise<Float32Array[]> {
    const inDim = GRID * GRID * 3;
    return images.map((img) => {
      const pooled = this.pool(img);
      const out = new Float32Array(this.outDim);
      for (let j = 0; j < this.outDim; j++) {
        let acc = 0;
        for (let i = 0; i < inDim; i++) {
          acc += pooled[i] * this.projection[i * this.outDim + j];
        }
        out[j] = acc;
      }
      return out;
    });
  }
}

class TransformersEncoder implements Encoder {
  readonly name: string;
  readonly checkpoint: string;
  private extractor: any = null;
  private width: number | null = null;

  constructor(name: string, checkpoint: string) {
    this.name = name;
    this.checkpoint = checkpoint;
  }

  private async load(): Promise<any> {
    if (this.extractor) return this.extractor;
    let transformers: any;
    try {
      transformers = await import('@xenova/transformers');
    } catch (err) {
      throw new Error(
        `encoder ${this.name} needs the optional @xenova/transformers package: ` +
        `${(err as Error).message}`,
      );
    }
    transformers.env.allowRemoteModels = process.env.EMBED_ALLOW_DOWNLOADS === '1';
    try {
      this.extractor = await transformers.pipeline('image-feature-extraction', this.checkpoint);
    } catch (err) {
      throw new Error(
        `missing weights for ${this.name} (${this.checkpoint}): ${(err as Error).message}. ` +
        `Cache them locally or set EMBED_ALLOW_DOWNLOADS=1 on a networked machine.`,
      );
    }
    return this.extractor;
  }

  async dim(): Promise<number> {
    if (this.width !== null) return this.width;
    const probe: ImageSample = {
      index: -1, label: 0, width: 32, height: 32,
      pixels: new Uint8Array(32 * 32 * 3),
    };
    const [vec] = await this.encodeBatch([probe]);
    this.width = vec.length;
    return this.width;
  }

  async encodeBatch(images: ImageSample[]): Promise<Float32Array[]> {
    const extractor = await this.load();
    const transformers = await import('@xenova/transformers');
    const out: Float32Array[] = [];
    for (const img of images) {
      const raw = new transformers.RawImage(img.pixels, img.width, img.height, 3);
      const features = await extractor(raw, { pooling: 'mean' });
      out.push(Float32Array.from(features.data as Iterable<number>));
    }
    if (this.width === null && out.length) this.width = out[0].length;
    return out;
  }
}

export function resolveEncoder(name: string): Encoder {
  const projMatch = /^randproj(\d+)$/.exec(name);
  if (projMatch) {
    return new RandomProjectionEncoder(parseInt(projMatch[1], 10));
  }
  const checkpoint = PRETRAINED[name];
  if (!checkpoint) {
    const known = [...Object.keys(PRETRAINED), 'randproj<dim>'].join(', ');
    throw new Error(`unknown encoder ${JSON.stringify(name)} (known: ${known})`);
  }
  return new TransformersEncoder(name, checkpoint);
}
