import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { main, parseArgs } from "../src/cli.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

describe("argument parsing", () => {
  it("parses the documented flags", () => {
    const opts = parseArgs([
      "--kind", "power",
      "--in", "a.csv",
      "--out", "b.svg",
      "--filter", "beta=3.0",
      "--filter", "procedure=uncond-sd",
    ]);
    expect(opts.kind).toBe("power");
    expect(opts.filters).toEqual([
      { column: "beta", value: "3.0" },
      { column: "procedure", value: "uncond-sd" },
    ]);
  });

  it("rejects unknown kinds and missing paths", () => {
    expect(() => parseArgs(["--kind", "pie"])).toThrow();
    expect(() => parseArgs(["--kind", "power"])).toThrow();
  });
});

describe("end to end", () => {
  it("renders the power fixture", () => {
    const dir = mkdtempSync(join(tmpdir(), "crt-plot-"));
    const out = join(dir, "power.svg");
    const code = main(["--kind", "power", "--in", join(FIXTURES, "power.csv"), "--out", out]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("beta = 3");
  });

  it("renders the decile fixture with a reference line", () => {
    const dir = mkdtempSync(join(tmpdir(), "crt-plot-"));
    const out = join(dir, "deciles.svg");
    const code = main(["--kind", "deciles", "--in", join(FIXTURES, "deciles.csv"), "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain('class="reference-line"');
  });

  it("swaps a png extension for svg", () => {
    const dir = mkdtempSync(join(tmpdir(), "crt-plot-"));
    const code = main([
      "--kind", "deciles",
      "--in", join(FIXTURES, "deciles.csv"),
      "--out", join(dir, "plot.png"),
    ]);
    expect(code).toBe(0);
    expect(existsSync(join(dir, "plot.svg"))).toBe(true);
  });

  it("fails cleanly on an empty selection", () => {
    const dir = mkdtempSync(join(tmpdir(), "crt-plot-"));
    const code = main([
      "--kind", "power",
      "--in", join(FIXTURES, "power.csv"),
      "--out", join(dir, "x.svg"),
      "--filter", "model=unknown",
    ]);
    expect(code).toBe(1);
  });
});
