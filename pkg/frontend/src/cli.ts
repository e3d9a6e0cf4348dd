#!/usr/bin/env node
/**
 * render_figs <kind> <inputs...> -o <output.svg>
 *
 * Renders one figure from run output CSV tables. Exit codes follow the
 * producing toolkit: 0 success, 2 usage or schema problem, 4 I/O.
 */

import { realpathSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { figureKinds, renderFigure, FigureKind } from "./figures.js";
import { SchemaError } from "./schema.js";

const USAGE =
  `usage: render_figs <${figureKinds().join("|")}> <input.csv...> ` +
  "-o <output.svg> [--title T] [--x-label X] [--y-label Y]";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        output: { type: "string", short: "o" },
        title: { type: "string" },
        "x-label": { type: "string" },
        "y-label": { type: "string" },
      },
    });
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error(USAGE);
    return 2;
  }
  const [kind, ...inputs] = parsed.positionals;
  const output = parsed.values.output;
  if (kind === undefined || inputs.length === 0 || output === undefined) {
    console.error(USAGE);
    return 2;
  }
  if (!(figureKinds() as string[]).includes(kind)) {
    console.error(
      `unknown kind ${JSON.stringify(kind)}; expected one of ` +
        figureKinds().join(", "),
    );
    return 2;
  }
  try {
    renderFigure({
      kind: kind as FigureKind,
      inputs,
      output,
      title: parsed.values.title,
      xLabel: parsed.values["x-label"],
      yLabel: parsed.values["y-label"],
    });
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    if (err instanceof Error && "code" in err) {
      console.error(`io error: ${err.message}`);
      return 4;
    }
    throw err;
  }
  return 0;
}

// Resolve the bin shim symlink so the guard also fires when installed.
const invokedDirectly = (() => {
  const entry = process.argv[1];
  if (entry === undefined) return false;
  try {
    return import.meta.url === pathToFileURL(realpathSync(entry)).href;
  } catch {
    return false;
  }
})();
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
