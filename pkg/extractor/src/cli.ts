#!/usr/bin/env node
/**
 * Command line: `extract` produces embedding matrices, `degrade` produces
 * perturbed image folders.  Exit codes follow the consumer's convention:
 * 0 success, 2 bad input or usage, 1 unexpected failure.
 */

import * as path from "node:path";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FAMILIES, Family, degradeFolder } from "./degrade.js";
import { extractFolder, listImages } from "./extract.js";
import { PRESETS } from "./presets.js";

export async function main(argv: string[]): Promise<number> {
  let code = 0;
  const parser = yargs(argv)
    .scriptName("swdist-extract")
    .command(
      "extract",
      "embed an image folder into an .npy matrix",
      (y) => y
        .option("backbone", { choices: Object.keys(PRESETS), demandOption: true, type: "string" })
        .option("images", { type: "string", demandOption: true, describe: "input image directory" })
        .option("out", { type: "string", demandOption: true, describe: "output .npy path" })
        .option("manifest", { type: "string", describe: "manifest JSON to append to" })
        .option("dataset", { type: "string", describe: "dataset id (default: folder name)" })
        .option("condition", { type: "string", default: "clean" })
        .option("severity", { type: "number", describe: "severity label, omit for clean" }),
      (args) => {
        const preset = PRESETS[args.backbone as string];
        const res = extractFolder(
          args.images as string, preset, args.out as string, args.manifest,
          {
            dataset: args.dataset,
            condition: args.condition as string,
            severity: args.severity ?? null,
          },
        );
        console.log(`${res.outPath}: ${res.rows}x${res.dim}`
          + (res.skipped.length ? ` (skipped ${res.skipped.length})` : ""));
      },
    )
    .command(
      "degrade",
      "write degraded copies of an image folder",
      (y) => y
        .option("family", { choices: FAMILIES as unknown as string[], demandOption: true, type: "string" })
        .option("severity", { type: "number", demandOption: true, describe: "integer 1..5" })
        .option("images", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true, describe: "output directory" }),
      (args) => {
        const files = listImages(args.images as string);
        if (files.length === 0) {
          throw new RangeError(`${args.images}: no images found`);
        }
        const written = degradeFolder(
          files, args.out as string, args.family as Family, args.severity as number);
        console.log(`${args.out}: ${written.length} images`
          + ` (${args.family} severity ${args.severity})`);
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      if (err) throw err;
      console.error(msg);
      code = 2;
    })
    .exitProcess(false);

  try {
    await parser.parse();
  } catch (err) {
    const e = err as NodeJS.ErrnoException;
    const isInput = e instanceof RangeError
      || e.code === "ENOENT" || e.code === "ENOTDIR" || e.code === "EACCES"
      || e.name === "DecodeError"
      || /no images|failed to decode|severity must be/.test(e.message ?? "");
    console.error(e.message);
    return isInput ? 2 : 1;
  }
  return code;
}

const entry = process.argv[1] ? path.resolve(process.argv[1]) : "";
if (entry && import.meta.url === `file://${entry}`) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
