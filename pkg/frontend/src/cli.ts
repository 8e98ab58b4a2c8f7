/** render <figure-kind> <inputs...> -o <path> */

import { writeFileSync } from "node:fs";

import { FIGURE_KINDS } from "./figures.js";

function usage(): string {
  const kinds = Object.entries(FIGURE_KINDS)
    .map(([name, spec]) => `  ${name.padEnd(20)} ${spec.describe}`)
    .join("\n");
  return `usage: render <figure-kind> <inputs...> -o <path>\n\nfigure kinds:\n${kinds}\n`;
}

export function main(argv: string[]): number {
  const args = [...argv];
  if (args.length === 0 || args[0] === "--help" || args[0] === "-h") {
    process.stdout.write(usage());
    return args.length === 0 ? 2 : 0;
  }
  const kind = args.shift()!;
  const spec = FIGURE_KINDS[kind];
  if (!spec) {
    process.stderr.write(`unknown figure kind '${kind}'\n${usage()}`);
    return 2;
  }
  const oIdx = args.indexOf("-o");
  if (oIdx < 0 || oIdx + 1 >= args.length) {
    process.stderr.write(`missing -o <path>\n${usage()}`);
    return 2;
  }
  const outPath = args[oIdx + 1];
  const inputs = args.slice(0, oIdx).concat(args.slice(oIdx + 2));
  if (inputs.length !== spec.inputs) {
    process.stderr.write(`${kind} expects ${spec.inputs} input file(s), got ${inputs.length}\n`);
    return 2;
  }
  let svg: string;
  try {
    svg = spec.render(...inputs);
  } catch (err) {
    process.stderr.write(`render failed: ${(err as Error).message}\n`);
    return 1;
  }
  writeFileSync(outPath, svg);
  process.stdout.write(`wrote ${outPath}\n`);
  return 0;
}

const exitCode = main(process.argv.slice(2));
process.exit(exitCode);
