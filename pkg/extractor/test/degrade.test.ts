import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import {
  FAMILIES, Family, degradeFolder, degradeImage, encodeDegraded, fileRng,
  scheduleParam,
} from "../src/degrade.js";
import { decodeImage, pixelMse } from "../src/image.js";
import { patternImage, writeCorpus } from "./fixtures.js";

let dir: string;
beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "degrade-"));
});
afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("severity schedules", () => {
  it("rejects severity outside 1..5", () => {
    for (const bad of [0, 6, 1.5, -1]) {
      expect(() => scheduleParam("gaussian_noise", bad)).toThrow(/1\.\.5/);
    }
  });

  it("parameters are strictly monotone in severity", () => {
    for (const family of FAMILIES) {
      const params = [1, 2, 3, 4, 5].map((s) => scheduleParam(family, s));
      for (let i = 1; i < params.length; i++) {
        // jpeg quality and resolution factor fall; the rest rise
        if (family === "jpeg_compression" || family === "resolution_drop") {
          expect(params[i]).toBeLessThan(params[i - 1]);
        } else {
          expect(params[i]).toBeGreaterThan(params[i - 1]);
        }
      }
    }
  });
});

function mseAtSeverity(img: ReturnType<typeof patternImage>,
                       family: Family, severity: number): number {
  const rng = fileRng(family, severity, "probe.png");
  const degraded = degradeImage(img, family, severity, rng);
  if (family === "jpeg_compression") {
    // the artifact is in the encoded bytes, so compare after a round trip
    const { bytes } = encodeDegraded(degraded, family, severity);
    const tmp = path.join(dir, `probe-${severity}.jpg`);
    fs.writeFileSync(tmp, bytes);
    return pixelMse(img, decodeImage(tmp));
  }
  return pixelMse(img, degraded);
}

describe("pixel distortion", () => {
  it.each(FAMILIES.map((f) => [f] as [Family]))(
    "%s mean MSE strictly increases with severity", (family) => {
      const img = patternImage("mono");
      const curve = [1, 2, 3, 4, 5].map((s) => mseAtSeverity(img, family, s));
      for (let i = 1; i < curve.length; i++) {
        expect(curve[i]).toBeGreaterThan(curve[i - 1]);
      }
    });

  it("jpeg file sizes weakly decrease as quality falls", () => {
    const img = patternImage("sizes");
    const sizes = [1, 2, 3, 4, 5].map((s) =>
      encodeDegraded(degradeImage(img, "jpeg_compression", s,
        fileRng("jpeg_compression", s, "p.png")), "jpeg_compression", s).bytes.length);
    for (let i = 1; i < sizes.length; i++) {
      expect(sizes[i]).toBeLessThanOrEqual(sizes[i - 1]);
    }
  });
});

describe("determinism", () => {
  it("same file and spec give identical bytes, twice", () => {
    const files = writeCorpus(path.join(dir, "src"), 3);
    const out1 = degradeFolder(files, path.join(dir, "d1"), "gaussian_noise", 3);
    const out2 = degradeFolder(files, path.join(dir, "d2"), "gaussian_noise", 3);
    expect(out1.length).toBe(3);
    for (let i = 0; i < out1.length; i++) {
      expect(fs.readFileSync(out1[i]).equals(fs.readFileSync(out2[i]))).toBe(true);
    }
  });

  it("noise differs between files because seeds come from names", () => {
    const img = patternImage("shared");
    const a = degradeImage(img, "gaussian_noise", 2, fileRng("gaussian_noise", 2, "a.png"));
    const b = degradeImage(img, "gaussian_noise", 2, fileRng("gaussian_noise", 2, "b.png"));
    expect(Buffer.from(a.data).equals(Buffer.from(b.data))).toBe(false);
  });

  it("noise differs across severities on one file", () => {
    const img = patternImage("sev");
    const a = degradeImage(img, "gaussian_noise", 1, fileRng("gaussian_noise", 1, "a.png"));
    const b = degradeImage(img, "gaussian_noise", 2, fileRng("gaussian_noise", 2, "a.png"));
    expect(Buffer.from(a.data).equals(Buffer.from(b.data))).toBe(false);
  });
});
