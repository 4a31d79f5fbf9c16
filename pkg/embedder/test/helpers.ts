import * as fs from 'fs';
import * as path from 'path';

/** Write a P6 PPM with a solid color block plus a per-image gradient. */
export function writePpm(
  file: string,
  width: number,
  height: number,
  rgb: [number, number, number],
  salt = 0,
): void {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, 'ascii');
  const pixels = Buffer.alloc(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const p = 3 * (y * width + x);
      pixels[p] = (rgb[0] + x + salt) % 256;
      pixels[p + 1] = (rgb[1] + y + salt) % 256;
      pixels[p + 2] = (rgb[2] + salt) % 256;
    }
  }
  fs.writeFileSync(file, Buffer.concat([header, pixels]));
}

/** Ten-image, two-class PPM fixture dataset in `root`. */
export function makeFixtureDataset(root: string): void {
  fs.mkdirSync(root, { recursive: true });
  const rows: string[] = ['filename,label'];
  for (let i = 0; i < 10; i++) {
    const label = i < 5 ? 0 : 1;
    const file = `img_${i}.ppm`;
    const base: [number, number, number] = label === 0 ? [200, 30, 30] : [30, 30, 200];
    writePpm(path.join(root, file), 16, 16, base, i * 7);
    rows.push(`${file},${label}`);
  }
  fs.writeFileSync(path.join(root, 'labels.csv'), rows.join('\n') + '\n');
}
