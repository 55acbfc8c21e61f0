//! Browser bindings: kernel profile, densities and the `m(t)` sweep, each
//! returned as a flat `Float64Array` of interleaved columns.

use std::sync::Arc;

use wasm_bindgen::prelude::*;
use zeta_kernel::archimedean::{self, ArchParams, Density};
use zeta_kernel::fredholm::{m_of_t, Discretization};
use zeta_kernel::kernel::{build_kernel, Kernel};

fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// `[x, K(x)]` pairs on `[-0.25, x_max]`.
pub fn kernel_rows(theta: f64, order: usize, x_max: f64, count: usize) -> zeta_kernel::Result<Vec<f64>> {
    let k = build_kernel(theta, order, x_max)?;
    Ok(grid(-0.25, x_max, count)
        .into_iter()
        .flat_map(|x| [x, k.value(x)])
        .collect())
}

/// `[x, Ψ^N(x), g(x)]` triples on `(0, x_max]`.
pub fn density_rows(theta: f64, order: usize, x_max: f64, count: usize) -> zeta_kernel::Result<Vec<f64>> {
    let p = ArchParams::new(theta, order, x_max)?;
    let mut out = Vec::with_capacity(3 * count);
    for x in grid(x_max / count.max(2) as f64, x_max, count) {
        out.push(x);
        out.push(Density::Psi.eval(&p, x)?);
        out.push(archimedean::g_closed_form(&p, x)?);
    }
    Ok(out)
}

/// `[t, m, det(1+K), det(1-K)]` rows on `t = 0, …, t_max`.
pub fn sweep_rows(
    theta: f64,
    t_max: f64,
    steps: usize,
    panels_per_unit: usize,
    nodes_per_panel: usize,
) -> zeta_kernel::Result<Vec<f64>> {
    let k: Arc<dyn Kernel> = Arc::new(build_kernel(theta, archimedean::DEFAULT_ORDER, 2.0 * t_max + 0.1)?);
    let disc = Discretization::new(panels_per_unit, nodes_per_panel)?;
    let rows = m_of_t(k, &grid(0.0, t_max, steps + 1), disc)?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.t, r.m, r.det_plus, r.det_minus])
        .collect())
}

fn js(e: zeta_kernel::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = kernelProfile)]
pub fn kernel_profile(theta: f64, order: usize, x_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    kernel_rows(theta, order, x_max, count).map_err(js)
}

#[wasm_bindgen]
pub fn densities(theta: f64, order: usize, x_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    density_rows(theta, order, x_max, count).map_err(js)
}

#[wasm_bindgen(js_name = hamiltonianSweep)]
pub fn hamiltonian_sweep(
    theta: f64,
    t_max: f64,
    steps: usize,
    panels_per_unit: usize,
    nodes_per_panel: usize,
) -> Result<Vec<f64>, JsError> {
    sweep_rows(theta, t_max, steps, panels_per_unit, nodes_per_panel).map_err(js)
}

#[wasm_bindgen]
pub fn version() -> String {
    zeta_kernel::VERSION.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_vanishes_left_of_zero() {
        let rows = kernel_rows(2.0, 14, 2.0, 9).unwrap();
        assert_eq!(rows.len(), 18);
        assert_eq!((rows[0], rows[1]), (-0.25, 0.0));
        assert_eq!(rows[16], 2.0);
    }

    #[test]
    fn sweep_starts_at_one() {
        let rows = sweep_rows(2.0, 0.5, 2, 4, 8).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(&rows[..4], &[0.0, 1.0, 1.0, 1.0]);
        assert!(rows[4..].chunks(4).all(|r| r[1] > 1.0));
    }

    #[test]
    fn bad_parameters_are_errors() {
        assert!(density_rows(0.5, 14, 2.0, 4).is_err());
        assert!(sweep_rows(2.0, 1.0, 4, 0, 8).is_err());
    }
}
