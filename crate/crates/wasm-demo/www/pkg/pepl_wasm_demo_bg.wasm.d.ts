/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_mixexplorer_free: (a: number, b: number) => void;
export const __wbg_mixoutcome_free: (a: number, b: number) => void;
export const __wbg_thresholdtrace_free: (a: number, b: number) => void;
export const lr_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const mixexplorer_heatmap_rgba: (a: number, b: number) => [number, number];
export const mixexplorer_height: (a: number) => number;
export const mixexplorer_image_rgba: (a: number, b: number) => [number, number];
export const mixexplorer_marker: (a: number, b: number) => [number, number];
export const mixexplorer_mix: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const mixexplorer_new: (a: number, b: number, c: number) => [number, number, number];
export const mixexplorer_width: (a: number) => number;
export const mixoutcome_area: (a: number) => number;
export const mixoutcome_rgba: (a: number) => [number, number];
export const mixoutcome_rho_a: (a: number) => number;
export const mixoutcome_rho_b: (a: number) => number;
export const simulate_thresholds: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const thresholdtrace_class_thresholds: (a: number) => [number, number];
export const thresholdtrace_num_classes: (a: number) => number;
export const thresholdtrace_selection_rate: (a: number) => [number, number];
export const thresholdtrace_steps: (a: number) => number;
export const thresholdtrace_tau: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
