/**
 * Pixel-space degradation families with severity schedules 1..5.
 *
 * Each schedule is strictly monotone in its parameter, and the resulting
 * mean pixel MSE against the original increases with severity.  Noise is
 * seeded per file from (family, severity, basename) so reruns are
 * byte-identical.  Lossless families write PNG regardless of the input
 * container; jpeg_compression writes the actual JPEG bytes.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { RgbaImage, areaResize, decodeImage, encodeJpeg, encodePng, resize } from "./image.js";
import { Rng } from "./rng.js";

export const FAMILIES = [
  "gaussian_noise",
  "gaussian_blur",
  "resolution_drop",
  "jpeg_compression",
  "color_shift",
] as const;

export type Family = (typeof FAMILIES)[number];

export const SCHEDULES: Record<Family, readonly number[]> = {
  // sigma as a fraction of the 0..255 dynamic range
  gaussian_noise: [0.02, 0.05, 0.1, 0.2, 0.4],
  // blur kernel sigma in pixels
  gaussian_blur: [0.5, 1, 2, 4, 8],
  // downscale factor before re-upsampling
  resolution_drop: [0.8, 0.6, 0.4, 0.2, 0.1],
  // JPEG quality
  jpeg_compression: [80, 60, 40, 20, 10],
  // brightness offset in 0..255 units; hue angle rides along in matching steps
  color_shift: [8, 16, 32, 64, 96],
};

const HUE_DEGREES = [5, 10, 20, 40, 60];

export function scheduleParam(family: Family, severity: number): number {
  if (!Number.isInteger(severity) || severity < 1 || severity > 5) {
    throw new RangeError(`severity must be an integer in 1..5, got ${severity}`);
  }
  return SCHEDULES[family][severity - 1];
}

function clampByte(v: number): number {
  return v < 0 ? 0 : v > 255 ? 255 : Math.round(v);
}

function addNoise(img: RgbaImage, sigmaFrac: number, rng: Rng): RgbaImage {
  const out = new Uint8Array(img.data);
  const sigma = sigmaFrac * 255;
  for (let i = 0; i < img.width * img.height; i++) {
    for (let c = 0; c < 3; c++) {
      out[i * 4 + c] = clampByte(img.data[i * 4 + c] + sigma * rng.gauss());
    }
    out[i * 4 + 3] = 255;
  }
  return { width: img.width, height: img.height, data: out };
}

function gaussianKernel(sigma: number): Float64Array {
  const radius = Math.max(1, Math.ceil(3 * sigma));
  const k = new Float64Array(2 * radius + 1);
  let sum = 0;
  for (let i = -radius; i <= radius; i++) {
    const v = Math.exp(-(i * i) / (2 * sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (let i = 0; i < k.length; i++) k[i] /= sum;
  return k;
}

function blur(img: RgbaImage, sigma: number): RgbaImage {
  const k = gaussianKernel(sigma);
  const radius = (k.length - 1) / 2;
  const { width, height } = img;
  const tmp = new Float64Array(width * height * 3);
  // horizontal pass, edges clamped
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let t = -radius; t <= radius; t++) {
          const xx = Math.min(Math.max(x + t, 0), width - 1);
          acc += k[t + radius] * img.data[(y * width + xx) * 4 + c];
        }
        tmp[(y * width + x) * 3 + c] = acc;
      }
    }
  }
  const out = new Uint8Array(width * height * 4);
  // vertical pass
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let t = -radius; t <= radius; t++) {
          const yy = Math.min(Math.max(y + t, 0), height - 1);
          acc += k[t + radius] * tmp[(yy * width + x) * 3 + c];
        }
        out[(y * width + x) * 4 + c] = clampByte(acc);
      }
      out[(y * width + x) * 4 + 3] = 255;
    }
  }
  return { width, height, data: out };
}

function dropResolution(img: RgbaImage, factor: number): RgbaImage {
  const w = Math.max(1, Math.round(img.width * factor));
  const h = Math.max(1, Math.round(img.height * factor));
  // area average down (no aliasing), bilinear back up
  return resize(areaResize(img, w, h), img.width, img.height);
}

function shiftColors(img: RgbaImage, offset: number, hueDeg: number): RgbaImage {
  const a = (hueDeg * Math.PI) / 180;
  const cos = Math.cos(a);
  const sin = Math.sin(a);
  // standard luminance-preserving hue rotation matrix
  const m = [
    0.213 + cos * 0.787 - sin * 0.213, 0.715 - cos * 0.715 - sin * 0.715, 0.072 - cos * 0.072 + sin * 0.928,
    0.213 - cos * 0.213 + sin * 0.143, 0.715 + cos * 0.285 + sin * 0.140, 0.072 - cos * 0.072 - sin * 0.283,
    0.213 - cos * 0.213 - sin * 0.787, 0.715 - cos * 0.715 + sin * 0.715, 0.072 + cos * 0.928 + sin * 0.072,
  ];
  const out = new Uint8Array(img.data.length);
  for (let i = 0; i < img.width * img.height; i++) {
    const r = img.data[i * 4];
    const g = img.data[i * 4 + 1];
    const b = img.data[i * 4 + 2];
    out[i * 4] = clampByte(m[0] * r + m[1] * g + m[2] * b + offset);
    out[i * 4 + 1] = clampByte(m[3] * r + m[4] * g + m[5] * b + offset);
    out[i * 4 + 2] = clampByte(m[6] * r + m[7] * g + m[8] * b + offset);
    out[i * 4 + 3] = 255;
  }
  return { width: img.width, height: img.height, data: out };
}

export function fileRng(family: Family, severity: number, fileName: string): Rng {
  return new Rng(`${family}:${severity}:${path.basename(fileName)}`);
}

/** Apply one family at one severity. Pure on pixels except for seeded noise. */
export function degradeImage(
  img: RgbaImage, family: Family, severity: number, rng: Rng,
): RgbaImage {
  const p = scheduleParam(family, severity);
  switch (family) {
    case "gaussian_noise":
      return addNoise(img, p, rng);
    case "gaussian_blur":
      return blur(img, p);
    case "resolution_drop":
      return dropResolution(img, p);
    case "jpeg_compression":
      // handled at encode time; pixels pass through
      return img;
    case "color_shift":
      return shiftColors(img, p, HUE_DEGREES[severity - 1]);
  }
}

/**
 * Encode a degraded image to bytes plus the file extension to use.
 * jpeg_compression products are real JPEGs; everything else stays lossless.
 */
export function encodeDegraded(
  img: RgbaImage, family: Family, severity: number,
): { bytes: Buffer; ext: string } {
  if (family === "jpeg_compression") {
    return { bytes: encodeJpeg(img, scheduleParam(family, severity)), ext: ".jpg" };
  }
  return { bytes: encodePng(img), ext: ".png" };
}

export function degradedFileName(srcFile: string, family: Family, severity: number): string {
  const stem = path.basename(srcFile, path.extname(srcFile));
  const ext = family === "jpeg_compression" ? ".jpg" : ".png";
  return stem + ext;
}

/** Degrade every image in a folder; returns the written file paths. */
export function degradeFolder(
  images: string[], outDir: string, family: Family, severity: number,
): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const src of images) {
    const rng = fileRng(family, severity, src);
    const degraded = degradeImage(decodeImage(src), family, severity, rng);
    const { bytes } = encodeDegraded(degraded, family, severity);
    const dst = path.join(outDir, degradedFileName(src, family, severity));
    const tmp = dst + `.tmp-${process.pid}`;
    fs.writeFileSync(tmp, bytes);
    fs.renameSync(tmp, dst);
    written.push(dst);
  }
  return written;
}
