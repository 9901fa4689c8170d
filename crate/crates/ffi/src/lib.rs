//! C ABI over the `antlgp` colony simulator and LGP program VM.
//!
//! Handles are opaque and owned by the caller until the matching `_free`.
//! Every fallible call returns an [`AntlgpStatus`]; on failure the message
//! is kept per thread and can be copied out with [`antlgp_last_error`].
//! Panics never cross the boundary: they surface as
//! `ANTLGP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::mem::ManuallyDrop;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use antlgp::colony::{self, Colony, ColonyConfig};
use antlgp::lgp::{Compiled, Program};
use antlgp::swarm::AntParams;
use antlgp::{DataItem, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntlgpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Data = 4,
    Invariant = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

impl From<&Error> for AntlgpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidDimension(_) => AntlgpStatus::Config,
            Error::InvalidArgument(_) | Error::Precondition(_) => AntlgpStatus::InvalidArgument,
            Error::Invariant(_) => AntlgpStatus::Invariant,
            Error::Stage { source, .. } => AntlgpStatus::from(source.as_ref()),
            _ => AntlgpStatus::Data,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn fail(status: AntlgpStatus, message: impl Into<String>) -> AntlgpStatus {
    set_error(message.into());
    status
}

fn from_error(e: Error) -> AntlgpStatus {
    let status = AntlgpStatus::from(&e);
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> AntlgpStatus) -> AntlgpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(AntlgpStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(AntlgpStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf` and returns the full message length excluding the terminator.
/// Passing a null `buf` or zero `len` only queries the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn antlgp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn antlgp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Colony construction options. Zero `width`, `height` or `n_ants` selects
/// the size-based default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AntlgpColonyOptions {
    pub width: usize,
    pub height: usize,
    pub n_ants: usize,
    pub seed: u64,
    pub k1: f64,
    pub k2: f64,
    pub evaporation: f64,
    pub eta: f64,
    pub a: f64,
    pub beta: f64,
    pub delta: f64,
}

/// Options holding the published parameter values.
#[no_mangle]
pub extern "C" fn antlgp_colony_options_default() -> AntlgpColonyOptions {
    let p = AntParams::default();
    AntlgpColonyOptions {
        width: 0,
        height: 0,
        n_ants: 0,
        seed: 0,
        k1: p.k1,
        k2: p.k2,
        evaporation: p.evaporation,
        eta: p.eta,
        a: p.a,
        beta: p.beta,
        delta: p.delta,
    }
}

/// A running colony together with the items it sorts.
pub struct AntlgpColony {
    /// Borrows `items`.
    colony: ManuallyDrop<Colony<'static>>,
    items: *mut [DataItem],
}

impl Drop for AntlgpColony {
    fn drop(&mut self) {
        // SAFETY: the colony goes first, then the slice it borrowed, which
        // came from `Box::into_raw` in `antlgp_colony_new`.
        unsafe {
            ManuallyDrop::drop(&mut self.colony);
            drop(Box::from_raw(self.items));
        }
    }
}

/// Creates a colony over `n_items` items with `n_features` features each,
/// stored row-major in `features`. `labels` may be null; a negative label
/// means unknown. `options` may be null for defaults.
///
/// # Safety
/// `features` must hold `n_items * n_features` doubles, `labels` (when not
/// null) `n_items` integers, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_new(
    features: *const f64,
    n_items: usize,
    n_features: usize,
    labels: *const i32,
    options: *const AntlgpColonyOptions,
    out: *mut *mut AntlgpColony,
) -> AntlgpStatus {
    guard(|| {
        non_null!(features, out);
        if n_items == 0 || n_features == 0 {
            return fail(AntlgpStatus::Config, "need at least one item and one feature");
        }
        let Some(total) = n_items.checked_mul(n_features) else {
            return fail(AntlgpStatus::InvalidArgument, "item matrix size overflows");
        };
        let values = std::slice::from_raw_parts(features, total);
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return fail(AntlgpStatus::InvalidArgument, format!("feature {v} outside [0, 1]"));
        }
        let items: Box<[DataItem]> = values
            .chunks(n_features)
            .enumerate()
            .map(|(i, f)| {
                let label = if labels.is_null() { -1 } else { *labels.add(i) };
                DataItem::new(f.to_vec(), u32::try_from(label).ok(), i)
            })
            .collect();
        let opts = if options.is_null() {
            antlgp_colony_options_default()
        } else {
            *options
        };
        let mut config = ColonyConfig::for_items(n_items);
        if opts.width > 0 {
            config.width = opts.width;
        }
        if opts.height > 0 {
            config.height = opts.height;
        }
        config.n_ants = if opts.n_ants > 0 {
            opts.n_ants
        } else {
            colony::default_ants(config.width * config.height)
        };
        config.seed = opts.seed;
        config.t_max = u64::MAX;
        let p = &mut config.params;
        (p.k1, p.k2, p.evaporation, p.eta, p.a, p.beta, p.delta) =
            (opts.k1, opts.k2, opts.evaporation, opts.eta, opts.a, opts.beta, opts.delta);

        let items: *mut [DataItem] = Box::into_raw(items);
        // SAFETY: the slice stays alive until the handle is dropped, and the
        // colony borrowing it is dropped first.
        let borrowed: &'static [DataItem] = &*items;
        match Colony::new(config, borrowed) {
            Ok(colony) => {
                *out = Box::into_raw(Box::new(AntlgpColony {
                    colony: ManuallyDrop::new(colony),
                    items,
                }));
                AntlgpStatus::Ok
            }
            Err(e) => {
                drop(Box::from_raw(items));
                from_error(e)
            }
        }
    })
}

/// Advances the colony by `sweeps` sweeps.
///
/// # Safety
/// `colony` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_step(colony: *mut AntlgpColony, sweeps: u64) -> AntlgpStatus {
    guard(|| {
        non_null!(colony);
        let c = &mut (*colony).colony;
        for _ in 0..sweeps {
            if let Err(e) = c.sweep() {
                return from_error(e);
            }
        }
        AntlgpStatus::Ok
    })
}

/// Makes every laden agent put its item down on the nearest free cell.
///
/// # Safety
/// `colony` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_finish(colony: *mut AntlgpColony) -> AntlgpStatus {
    guard(|| {
        non_null!(colony);
        match (*colony).colony.force_drop() {
            Ok(()) => AntlgpStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Sweeps completed so far.
///
/// # Safety
/// `colony` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_step_count(colony: *const AntlgpColony) -> u64 {
    colony.as_ref().map_or(0, |c| c.colony.step_count())
}

/// Items currently held by agents.
///
/// # Safety
/// `colony` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_carried(colony: *const AntlgpColony) -> usize {
    colony.as_ref().map_or(0, |c| c.colony.carried())
}

/// Spatial entropy of items on the grid over `block` x `block` tiles.
///
/// # Safety
/// `colony` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_entropy(
    colony: *const AntlgpColony,
    block: usize,
    out: *mut f64,
) -> AntlgpStatus {
    guard(|| {
        non_null!(colony, out);
        match colony::spatial_entropy((*colony).colony.habitat(), block) {
            Ok(h) => {
                *out = h;
                AntlgpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes one cluster id per item into `labels` (length `len`, at least the
/// item count) and the cluster count into `n_clusters`. Fails while any
/// item is carried.
///
/// # Safety
/// `colony` must be a live handle, `labels` must hold `len` writable
/// integers and `n_clusters` must be writable.
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_clusters(
    colony: *const AntlgpColony,
    link_radius: usize,
    labels: *mut u32,
    len: usize,
    n_clusters: *mut usize,
) -> AntlgpStatus {
    guard(|| {
        non_null!(colony, labels, n_clusters);
        let c = &(*colony).colony;
        if c.carried() > 0 {
            return fail(
                AntlgpStatus::InvalidArgument,
                "items are still carried; call antlgp_colony_finish first",
            );
        }
        let assignment = match colony::extract_clusters(c.habitat(), link_radius) {
            Ok(a) => a,
            Err(e) => return from_error(e),
        };
        if len < assignment.labels.len() {
            return fail(
                AntlgpStatus::BufferTooSmall,
                format!("need room for {} labels, got {len}", assignment.labels.len()),
            );
        }
        for (i, &l) in assignment.labels.iter().enumerate() {
            *labels.add(i) = l as u32;
        }
        *n_clusters = assignment.n_clusters;
        AntlgpStatus::Ok
    })
}

/// Releases a colony handle. Null is ignored.
///
/// # Safety
/// `colony` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn antlgp_colony_free(colony: *mut AntlgpColony) {
    if !colony.is_null() {
        drop(Box::from_raw(colony));
    }
}

/// A parsed, compiled LGP program.
pub struct AntlgpProgram {
    program: Program,
    compiled: Compiled,
    registers: Vec<f64>,
}

/// Parses the textual program format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn antlgp_program_parse(text: *const c_char, out: *mut *mut AntlgpProgram) -> AntlgpStatus {
    guard(|| {
        non_null!(text, out);
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(AntlgpStatus::InvalidArgument, "program text is not UTF-8");
        };
        let parsed = Program::parse(text).and_then(|p| p.compile().map(|c| (p, c)));
        match parsed {
            Ok((program, compiled)) => {
                let registers = compiled.registers(&program);
                *out = Box::into_raw(Box::new(AntlgpProgram {
                    program,
                    compiled,
                    registers,
                }));
                AntlgpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of inputs the program reads.
///
/// # Safety
/// `program` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn antlgp_program_n_inputs(program: *const AntlgpProgram) -> usize {
    program.as_ref().map_or(0, |p| p.program.n_inputs)
}

/// Runs the program on one input vector.
///
/// # Safety
/// `program` must be a live handle, `inputs` must hold `n_inputs` doubles
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn antlgp_program_execute(
    program: *mut AntlgpProgram,
    inputs: *const f64,
    n_inputs: usize,
    out: *mut f64,
) -> AntlgpStatus {
    guard(|| {
        non_null!(program, out);
        if inputs.is_null() && n_inputs > 0 {
            return fail(AntlgpStatus::NullPointer, "`inputs` is null");
        }
        let p = &mut *program;
        let inputs = if n_inputs == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(inputs, n_inputs)
        };
        match p.compiled.run(&mut p.registers, inputs) {
            Ok(v) => {
                *out = v;
                AntlgpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a program handle. Null is ignored.
///
/// # Safety
/// `program` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn antlgp_program_free(program: *mut AntlgpProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}
