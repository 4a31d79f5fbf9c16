#!/usr/bin/env node
/**
 * embed: encode an image dataset into a FASTEMB1 embedding file.
 *
 *   embed --dataset cifar10 --split train --encoder siglip --out train.femb
 *   embed verify <file.femb>
 */

import { encode } from './encode';
import { formatReport, verify } from './verify';

interface Args {
  [key: string]: string;
}

function parseFlags(argv: string[]): Args {
  const args: Args = {};
  for (let i = 0; i < argv.length; i++) {
    const token = argv[i];
    if (!token.startsWith('--')) {
      throw new Error(`unexpected argument ${JSON.stringify(token)}`);
    }
    const key = token.slice(2);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith('--')) {
      throw new Error(`flag --${key} needs a value`);
    }
    args[key] = value;
    i++;
  }
  return args;
}

async function main(): Promise<number> {
  const argv = process.argv.slice(2);
  if (argv[0] === 'verify') {
    if (!argv[1]) {
      console.error('usage: embed verify <file.femb>');
      return 2;
    }
    const report = verify(argv[1]);
    console.log(formatReport(report));
    return report.ok ? 0 : 3;
  }

  let args: Args;
  try {
    args = parseFlags(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  for (const required of ['dataset', 'split', 'encoder', 'out']) {
    if (!args[required]) {
      console.error(
        'usage: embed --dataset <cifar10|dir:path> --split <train|test> ' +
        '--encoder <siglip|clip|evaclip|dinov2|resnet50|randproj<dim>> --out <file> ' +
        '[--batch-size N]',
      );
      return 2;
    }
  }
  try {
    const result = await encode({
      dataset: args['dataset'],
      split: args['split'],
      encoder: args['encoder'],
      batchSize: parseInt(args['batch-size'] ?? '16', 10),
      out: args['out'],
    });
    console.log(
      `wrote ${args['out']}: n=${result.written} d=${result.dim} ` +
      `skipped=${result.skipped.length} manifest=${result.manifestPath}`,
    );
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
