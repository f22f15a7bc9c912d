//! C ABI for `vkrod`.
//!
//! Every fallible function returns a [`VkrodStatus`]. On failure a message is stored per thread
//! and can be read with [`vkrod_last_error`]. Cells are opaque heap handles released with
//! [`vkrod_cell_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vkrod::cli::{self, CliError};
use vkrod::cross_section::{effective_stiffness, BuiltinShape, GeometricReport};
use vkrod::material::MaterialModel;
use vkrod::rod::{RodMesh1D, RodSystem};
use vkrod::{CrossSectionMesh, EffectiveStiffness};

/// Result codes. Values 3 to 9 match the exit statuses of the command-line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VkrodStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Mesh = 5,
    Cell = 6,
    Rod = 7,
    Dynamics = 8,
    Rescale = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VkrodShape {
    Disk = 0,
    Square = 1,
    Rectangle = 2,
}

/// Area moments of the normalized section.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VkrodGeometry {
    pub area: f64,
    pub i2: f64,
    pub i3: f64,
    pub mu_s: f64,
}

/// Solved cross-section: effective stiffness and section moments.
pub struct VkrodCell {
    stiffness: EffectiveStiffness,
    geometry: GeometricReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(VkrodStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e.exit_code() {
            3 => VkrodStatus::Config,
            4 => VkrodStatus::Io,
            5 => VkrodStatus::Mesh,
            6 => VkrodStatus::Cell,
            7 => VkrodStatus::Rod,
            8 => VkrodStatus::Dynamics,
            _ => VkrodStatus::Rescale,
        };
        Failure(status, e.to_string())
    }
}

fn fail<E: std::fmt::Display>(status: VkrodStatus) -> impl Fn(E) -> Failure {
    move |e| Failure(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VkrodStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VkrodStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VkrodStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure(VkrodStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(VkrodStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

unsafe fn cell_arg<'a>(cell: *const VkrodCell) -> Result<&'a VkrodCell, Failure> {
    cell.as_ref()
        .ok_or_else(|| Failure(VkrodStatus::NullPointer, "cell is null".into()))
}

fn store_cell(out: *mut *mut VkrodCell, cell: VkrodCell) -> Result<(), Failure> {
    // Checked by the callers before any work is done.
    unsafe { *out = Box::into_raw(Box::new(cell)) };
    Ok(())
}

fn null_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(VkrodStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn solve_cell(mesh: CrossSectionMesh, material: &MaterialModel) -> Result<VkrodCell, Failure> {
    let (mesh, _) = mesh.normalize().map_err(fail(VkrodStatus::Mesh))?;
    let (stiffness, _) = effective_stiffness(&mesh, material).map_err(fail(VkrodStatus::Cell))?;
    Ok(VkrodCell {
        stiffness,
        geometry: mesh.moments(),
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn vkrod_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn vkrod_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Solves the cell problem of a built-in section with an isotropic material.
/// `aspect` is only read for rectangles.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vkrod_cell_from_shape(
    shape: VkrodShape,
    resolution: usize,
    aspect: f64,
    lambda: f64,
    mu: f64,
    out: *mut *mut VkrodCell,
) -> VkrodStatus {
    guard(|| {
        null_out(out)?;
        let shape = match shape {
            VkrodShape::Disk => BuiltinShape::Disk { resolution },
            VkrodShape::Square => BuiltinShape::Square { resolution },
            VkrodShape::Rectangle => BuiltinShape::Rectangle { resolution, aspect },
        };
        let material = MaterialModel::isotropic(lambda, mu).map_err(fail(VkrodStatus::InvalidArgument))?;
        let mesh = CrossSectionMesh::generate(shape).map_err(fail(VkrodStatus::Mesh))?;
        store_cell(out, solve_cell(mesh, &material)?)
    })
}

/// Solves the cell problem described by the `material` and `section` blocks of a JSON configuration.
///
/// # Safety
/// `config_path` must be null or a nul-terminated string; `out` as in [`vkrod_cell_from_shape`].
#[no_mangle]
pub unsafe extern "C" fn vkrod_cell_from_config(config_path: *const c_char, out: *mut *mut VkrodCell) -> VkrodStatus {
    guard(|| {
        null_out(out)?;
        let path = path_arg(config_path, "config_path")?;
        let cfg = cli::parse_config(path).map_err(|e| Failure::from(CliError::from(e)))?;
        let (mesh, _) = cfg.section.build(&cfg.base_dir).map_err(fail(VkrodStatus::Mesh))?;
        let (stiffness, _) = effective_stiffness(&mesh, &cfg.material_model()).map_err(fail(VkrodStatus::Cell))?;
        store_cell(
            out,
            VkrodCell {
                stiffness,
                geometry: mesh.moments(),
            },
        )
    })
}

/// Releases a cell. Null is ignored.
///
/// # Safety
/// `cell` must be null or a handle returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn vkrod_cell_free(cell: *mut VkrodCell) {
    if !cell.is_null() {
        drop(Box::from_raw(cell));
    }
}

/// Writes the 4×4 effective stiffness over `(r, κ₂, κ₃, τ)` row-major into `out[16]`.
///
/// # Safety
/// `cell` must be a live handle or null; `out` must be null or hold 16 doubles.
#[no_mangle]
pub unsafe extern "C" fn vkrod_cell_stiffness(cell: *const VkrodCell, out: *mut f64) -> VkrodStatus {
    guard(|| {
        let cell = cell_arg(cell)?;
        null_out(out)?;
        let m = cell.stiffness.matrix();
        let dst = std::slice::from_raw_parts_mut(out, 16);
        for i in 0..4 {
            for j in 0..4 {
                dst[4 * i + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `cell` must be a live handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vkrod_cell_geometry(cell: *const VkrodCell, out: *mut VkrodGeometry) -> VkrodStatus {
    guard(|| {
        let cell = cell_arg(cell)?;
        null_out(out)?;
        let g = &cell.geometry;
        *out = VkrodGeometry {
            area: g.area,
            i2: g.i2,
            i3: g.i3,
            mu_s: g.mu_s,
        };
        Ok(())
    })
}

/// Lowest `count` squared frequencies of the clamped rod linearized at rest, ascending.
///
/// # Safety
/// `cell` must be a live handle or null; `out` must be null or hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn vkrod_rod_spectrum(
    cell: *const VkrodCell,
    length: f64,
    n_elem: usize,
    count: usize,
    out: *mut f64,
) -> VkrodStatus {
    guard(|| {
        let cell = cell_arg(cell)?;
        null_out(out)?;
        let mesh = RodMesh1D::new(length, n_elem).map_err(fail(VkrodStatus::InvalidArgument))?;
        let system = RodSystem::new(mesh, &cell.stiffness, true).map_err(fail(VkrodStatus::Rod))?;
        let spectrum = system
            .linearized_spectrum(count, None)
            .map_err(fail(VkrodStatus::InvalidArgument))?;
        std::slice::from_raw_parts_mut(out, count).copy_from_slice(&spectrum.values);
        Ok(())
    })
}

/// Runs the dynamics pipeline of a configuration: writes the trajectory CSV to `out_path` and
/// the energy ledger next to it.
///
/// # Safety
/// Both arguments must be null or nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn vkrod_run(config_path: *const c_char, out_path: *const c_char) -> VkrodStatus {
    guard(|| {
        let config = path_arg(config_path, "config_path")?;
        let out = path_arg(out_path, "out_path")?;
        let cfg = cli::parse_config(config).map_err(|e| Failure::from(CliError::from(e)))?;
        cli::run(&cfg, config, out)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_handles_are_reported() {
        let mut q = [0.0; 16];
        let status = unsafe { vkrod_cell_stiffness(ptr::null(), q.as_mut_ptr()) };
        assert_eq!(status, VkrodStatus::NullPointer);
        assert!(!vkrod_last_error().is_null());
    }
}
