export { SchemaError, readTable, requireColumns } from "./schema.js";
export type { Table } from "./schema.js";
export {
  figureKinds,
  renderDichotomy,
  renderFigure,
  renderLambda,
} from "./figures.js";
export type { FigureKind, FigureSpec } from "./figures.js";
export { fmt, lineChart, scatterChart, PALETTE } from "./svg.js";
export type { ScatterPoint, Series } from "./svg.js";
