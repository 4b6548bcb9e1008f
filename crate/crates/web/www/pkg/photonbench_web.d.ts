/* tslint:disable */
/* eslint-disable */

export function fiber_sweep(wavelength_nm: number, r_min_nm: number, r_max_nm: number, points: number): string;

/**
 * Simulates the blinking-emitter scenario and returns g²(τ).
 */
export function simulate_g2(duration_s: number, mean_on_ms: number, mean_off_ms: number, seed: bigint): string;

export function taper_profile(r0_um: number, target_nm: number, hotzone_mm: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fiber_sweep: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly simulate_g2: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly taper_profile: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
