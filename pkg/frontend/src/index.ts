export {
  CsvSchemaError,
  DECILE_HEADER,
  POWER_HEADER,
  parseDecileCsv,
  parsePowerCsv,
} from "./csv.js";
export type { DecileRow, PowerRow } from "./csv.js";
export {
  EmptySelectionError,
  UnknownColumnError,
  buildDecileFigure,
  buildPowerFigure,
  parseFilter,
} from "./figure.js";
export type { Figure, Filter, Panel, Series, SeriesPoint } from "./figure.js";
export { renderSvg } from "./svg.js";
export { main, parseArgs, run } from "./cli.js";
