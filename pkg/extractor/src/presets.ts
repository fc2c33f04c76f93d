/**
 * Backbone presets and the deterministic feature encoder.
 *
 * The real backbones (CLIP ViT-L/14@336 and a multi-layer DINOv2 ViT-L)
 * need downloaded weights and an accelerator, neither of which this
 * package assumes.  What ships here is a stand-in encoder with the same
 * output contract: fixed dimensionality per preset, per-layer L2
 * normalization before concatenation, filename-ordered batched
 * processing, and bit-for-bit determinism.  Features are seeded linear
 * maps of decoded pixel content, so nearby images get nearby rows, which
 * is all the downstream distance protocol requires of a fixture backbone.
 * Swapping in real model weights only means replacing `layerFeatures`.
 */

import { RgbaImage, areaResize } from "./image.js";
import { Rng } from "./rng.js";

export interface BackbonePreset {
  /** Full backbone name recorded in manifests. */
  name: string;
  /** Total output dimensionality per image. */
  outputDim: number;
  /** Images per processing batch. */
  batchSize: number;
  /** Transformer layers whose (stand-in) tokens are concatenated. */
  layers: number[];
  /** Dimensionality of one layer's token. */
  blockDim: number;
}

export const PRESETS: Record<string, BackbonePreset> = {
  clip: {
    name: "clip-vit-l14-336",
    outputDim: 768,
    batchSize: 32,
    layers: [23],
    blockDim: 768,
  },
  dinov2: {
    name: "dinov2-vit-l14-multilayer",
    outputDim: 3072,
    batchSize: 16,
    layers: [6, 12, 23],
    blockDim: 1024,
  },
};

// 16x16 RGB thumbnail, centered, plus a bias term so the descriptor of a
// flat mid-gray image is still nonzero.
const THUMB = 16;
const DESCRIPTOR_DIM = THUMB * THUMB * 3 + 1;

function descriptor(img: RgbaImage): Float64Array {
  // area average: robust to pixel noise, no aliasing on big shrinks
  const t = areaResize(img, THUMB, THUMB);
  const z = new Float64Array(DESCRIPTOR_DIM);
  for (let i = 0; i < THUMB * THUMB; i++) {
    for (let c = 0; c < 3; c++) {
      z[i * 3 + c] = t.data[i * 4 + c] / 255 - 0.5;
    }
  }
  z[DESCRIPTOR_DIM - 1] = 1.0;
  return z;
}

// One projection matrix per (preset, layer), generated lazily from a seed
// derived from both names and cached for the process lifetime.
const projectionCache = new Map<string, Float64Array>();

function projection(preset: BackbonePreset, layer: number): Float64Array {
  const key = `${preset.name}#layer=${layer}`;
  let p = projectionCache.get(key);
  if (!p) {
    const rng = new Rng(key);
    p = new Float64Array(preset.blockDim * DESCRIPTOR_DIM);
    const scale = 1.0 / Math.sqrt(DESCRIPTOR_DIM);
    for (let i = 0; i < p.length; i++) p[i] = rng.gauss() * scale;
    projectionCache.set(key, p);
  }
  return p;
}

function layerFeatures(z: Float64Array, preset: BackbonePreset, layer: number): Float64Array {
  const p = projection(preset, layer);
  const out = new Float64Array(preset.blockDim);
  for (let i = 0; i < preset.blockDim; i++) {
    let acc = 0;
    const row = i * DESCRIPTOR_DIM;
    for (let j = 0; j < DESCRIPTOR_DIM; j++) acc += p[row + j] * z[j];
    out[i] = acc;
  }
  return out;
}

function normalizeInPlace(v: Float64Array): void {
  let acc = 0;
  for (let i = 0; i < v.length; i++) acc += v[i] * v[i];
  const norm = Math.sqrt(acc);
  if (norm === 0) throw new Error("zero feature vector cannot be normalized");
  for (let i = 0; i < v.length; i++) v[i] /= norm;
}

/**
 * Embed one image: per-layer features, each L2-normalized, concatenated.
 * For the clip preset this is a single unit-norm 768 vector; for dinov2
 * three unit-norm 1024 blocks giving 3072 dims.
 */
export function embedImage(img: RgbaImage, preset: BackbonePreset): Float64Array {
  const z = descriptor(img);
  const out = new Float64Array(preset.outputDim);
  preset.layers.forEach((layer, idx) => {
    const feat = layerFeatures(z, preset, layer);
    normalizeInPlace(feat);
    out.set(feat, idx * preset.blockDim);
  });
  return out;
}
