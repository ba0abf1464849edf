//! Electronic propagation across one nuclear step. Two interchangeable
//! constructions of the step unitary in the adiabatic basis:
//!
//! * `DiabaticTransform` (default): rotate to the diabatic basis with the
//!   old frame, apply exp(-i dt V(R_new)), rotate back with the new frame.
//!   The frame change carries the entire nonadiabatic coupling, so no
//!   velocity enters and mean-field propagation becomes representation
//!   independent to rounding.
//! * `AdiabaticDirect`: exponential of the effective generator
//!   E delta_nk - i (P/M) . d_nk evaluated at the new geometry and the
//!   half-step momentum.
//!
//! Both are unitary and agree to second order in the step.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::adiabatic::AdiabaticFrame;
use crate::linalg::{to_complex, unitary_exp_hermitian, unitary_exp_symmetric};
use crate::models::ModelDefinition;
use crate::Result;

use super::Scratch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElectronicStepping {
    #[default]
    DiabaticTransform,
    AdiabaticDirect,
}

impl ElectronicStepping {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "diabatic_transform" => ElectronicStepping::DiabaticTransform,
            "adiabatic_direct" => ElectronicStepping::AdiabaticDirect,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ElectronicStepping::DiabaticTransform => "diabatic_transform",
            ElectronicStepping::AdiabaticDirect => "adiabatic_direct",
        }
    }
}

/// Step unitary for payloads living in the adiabatic representation.
/// `p_half` is the momentum after the first half kick; `r_new` the drifted
/// geometry matching `frame_new`.
pub fn adiabatic_step_unitary(
    model: &ModelDefinition,
    stepping: ElectronicStepping,
    dt: f64,
    frame_old: &AdiabaticFrame,
    frame_new: &AdiabaticFrame,
    p_half: &DVector<f64>,
    r_new: &DVector<f64>,
    scratch: &mut Scratch,
) -> Result<DMatrix<Complex64>> {
    match stepping {
        ElectronicStepping::DiabaticTransform => {
            model.potential(r_new, &mut scratch.frame_ws.v);
            let u = unitary_exp_symmetric(&scratch.frame_ws.v, dt)?;
            Ok(frame_sandwich(&u, frame_old, frame_new))
        }
        ElectronicStepping::AdiabaticDirect => {
            frame_new.effective_potential(model, p_half, &mut scratch.nac, &mut scratch.veff);
            unitary_exp_hermitian(&scratch.veff, dt)
        }
    }
}

/// Rotate a diabatic step unitary into the adiabatic representation across a
/// frame change: T_new^T U T_old. The frame change carries the coupling.
pub fn frame_sandwich(
    u_diab: &DMatrix<Complex64>,
    frame_old: &AdiabaticFrame,
    frame_new: &AdiabaticFrame,
) -> DMatrix<Complex64> {
    let tn = to_complex(&frame_new.t);
    let to = to_complex(&frame_old.t);
    tn.transpose() * u_diab * to
}

/// Step unitary for payloads living in the diabatic representation:
/// exp(-i dt V(R_new)).
pub fn diabatic_step_unitary(
    model: &ModelDefinition,
    dt: f64,
    r_new: &DVector<f64>,
    scratch: &mut Scratch,
) -> Result<DMatrix<Complex64>> {
    model.potential(r_new, &mut scratch.frame_ws.v);
    unitary_exp_symmetric(&scratch.frame_ws.v, dt)
}
