export { loadCsv, parseCsv, SchemaError } from "./csv.js";
export { render } from "./figures.js";
export type { FigureInput, FigureKind } from "./figures.js";
export { toPng } from "./png.js";
export { toSvg } from "./svg.js";
export type { Scene } from "./scene.js";
