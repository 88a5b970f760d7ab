//! C ABI over the `abduce` engine.
//!
//! A model is loaded into an opaque [`AbduceModel`] handle. Instances are
//! passed as one value string per feature, in feature-map order; candidates
//! and explanations are arrays of feature indices. Every fallible call
//! returns an [`AbduceStatus`]; on failure [`abduce_last_error`] describes
//! the problem until the next call on the same thread.
//!
//! Output index buffers must hold at least `abduce_model_num_features`
//! entries.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use abduce::explain::{audit, ExplainError, Explainer, Minimality, Status};
use abduce::model::{parse_ensemble, Cube, Ensemble, FeatureSpace};
use abduce::oracle::{Budget, Oracle, OracleError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbduceStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    WrongPrediction = 6,
    NotEntailing = 7,
    Indeterminate = 8,
    Internal = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbduceMinimality {
    Subset = 0,
    Cardinality = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbduceAuditStatus {
    /// The candidate admits a counterexample.
    Optimistic = 0,
    /// The candidate entails the prediction but is not subset-minimal.
    Pessimistic = 1,
    /// The candidate is a subset-minimal explanation.
    Realistic = 2,
}

/// A parsed ensemble with its feature space and query budget.
pub struct AbduceModel {
    ensemble: Ensemble,
    space: FeatureSpace,
    budget: Budget,
    feature_names: Vec<CString>,
    class_names: Vec<CString>,
}

struct Failure(AbduceStatus, String);

type Outcome<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard(body: impl FnOnce() -> Outcome<()>) -> AbduceStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AbduceStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AbduceStatus::Panic
        }
    }
}

fn fail<T>(status: AbduceStatus, message: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, message.into()))
}

impl From<ExplainError> for Failure {
    fn from(e: ExplainError) -> Self {
        let status = match &e {
            _ if e.is_indeterminate() => AbduceStatus::Indeterminate,
            ExplainError::WrongPrediction { .. } => AbduceStatus::WrongPrediction,
            ExplainError::NotEntailing => AbduceStatus::NotEntailing,
            ExplainError::NotSubset | ExplainError::Oracle(OracleError::InvalidQuery(_)) => {
                AbduceStatus::InvalidArgument
            }
            _ => AbduceStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        ExplainError::from(e).into()
    }
}

unsafe fn model_ref<'a>(model: *const AbduceModel) -> Outcome<&'a AbduceModel> {
    match model.as_ref() {
        Some(m) => Ok(m),
        None => fail(AbduceStatus::NullArgument, "model is null"),
    }
}

unsafe fn out_ref<'a, T>(out: *mut T, what: &str) -> Outcome<&'a mut T> {
    match out.as_mut() {
        Some(o) => Ok(o),
        None => fail(AbduceStatus::NullArgument, format!("{what} is null")),
    }
}

unsafe fn c_str<'a>(ptr: *const c_char, what: &str) -> Outcome<&'a str> {
    if ptr.is_null() {
        return fail(AbduceStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(ptr).to_str().or_else(|_| fail(AbduceStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Outcome<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return fail(AbduceStatus::NullArgument, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

impl AbduceModel {
    fn new(ensemble: Ensemble, space: FeatureSpace) -> Self {
        let cstring = |s: &str| CString::new(s.replace('\0', " ")).expect("nul bytes removed");
        let feature_names = (0..space.len()).map(|f| cstring(space.name(f))).collect();
        let class_names = ensemble.class_names().iter().map(|c| cstring(c)).collect();
        Self { ensemble, space, budget: Budget::default(), feature_names, class_names }
    }

    fn oracle(&self) -> Oracle {
        Oracle::with_budget(&self.ensemble, &self.space, self.budget)
    }

    unsafe fn instance(&self, values: *const *const c_char, len: usize) -> Outcome<Cube> {
        let values = slice(values, len, "values")?;
        if values.len() != self.space.len() {
            return fail(
                AbduceStatus::InvalidArgument,
                format!("expected {} values, got {}", self.space.len(), values.len()),
            );
        }
        let mut cube = Cube::new();
        for (f, &ptr) in values.iter().enumerate() {
            let text = c_str(ptr, "value")?;
            let value = self
                .space
                .parse_value(f, text)
                .or_else(|e| fail(AbduceStatus::Parse, format!("feature {:?}: {e}", self.space.name(f))))?;
            cube.insert(f, value);
        }
        Ok(cube)
    }

    unsafe fn candidate(&self, instance: &Cube, features: *const usize, len: usize) -> Outcome<Cube> {
        let features = slice(features, len, "candidate")?;
        if let Some(&f) = features.iter().find(|&&f| f >= self.space.len()) {
            return fail(AbduceStatus::InvalidArgument, format!("feature index {f} out of range"));
        }
        Ok(instance.restrict(features.iter().copied()))
    }

    fn check_class(&self, class: usize) -> Outcome<()> {
        if class >= self.ensemble.num_classes() {
            return fail(AbduceStatus::InvalidArgument, format!("class {class} out of range"));
        }
        Ok(())
    }
}

unsafe fn write_features(cube: &Cube, out: *mut usize, out_len: *mut usize) -> Outcome<()> {
    let out_len = out_ref(out_len, "out_len")?;
    let features = cube.features();
    if !features.is_empty() && out.is_null() {
        return fail(AbduceStatus::NullArgument, "output buffer is null");
    }
    for (i, f) in features.iter().enumerate() {
        *out.add(i) = *f;
    }
    *out_len = features.len();
    Ok(())
}

fn minimality(mode: AbduceMinimality) -> Minimality {
    match mode {
        AbduceMinimality::Subset => Minimality::Subset,
        AbduceMinimality::Cardinality => Minimality::Cardinality,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn abduce_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a model and feature map held in memory.
///
/// # Safety
/// The buffers must be readable for the given lengths and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_from_bytes(
    model: *const u8,
    model_len: usize,
    feature_map: *const u8,
    feature_map_len: usize,
    out: *mut *mut AbduceModel,
) -> AbduceStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = slice(model, model_len, "model")?;
        let fmap = slice(feature_map, feature_map_len, "feature_map")?;
        let (ensemble, space) = parse_ensemble(model, fmap).or_else(|e| fail(AbduceStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(AbduceModel::new(ensemble, space)));
        Ok(())
    })
}

/// Reads and parses a model and feature map from disk.
///
/// # Safety
/// The paths must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_load(
    model_path: *const c_char,
    feature_map_path: *const c_char,
    out: *mut *mut AbduceModel,
) -> AbduceStatus {
    guard(|| {
        let read = |path: &str| std::fs::read(path).or_else(|e| fail(AbduceStatus::Io, format!("{path}: {e}")));
        let model = read(c_str(model_path, "model_path")?)?;
        let fmap = read(c_str(feature_map_path, "feature_map_path")?)?;
        let out = out_ref(out, "out")?;
        let (ensemble, space) = parse_ensemble(&model, &fmap).or_else(|e| fail(AbduceStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(AbduceModel::new(ensemble, space)));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from a loader of this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_free(model: *mut AbduceModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of features, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_num_features(model: *const AbduceModel) -> usize {
    model.as_ref().map_or(0, |m| m.space.len())
}

/// Number of classes, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_num_classes(model: *const AbduceModel) -> usize {
    model.as_ref().map_or(0, |m| m.ensemble.num_classes())
}

/// Name of a feature, owned by the model; null when out of range.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_feature_name(model: *const AbduceModel, feature: usize) -> *const c_char {
    model.as_ref().and_then(|m| m.feature_names.get(feature)).map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Name of a class, owned by the model; null when out of range.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_class_name(model: *const AbduceModel, class: usize) -> *const c_char {
    model.as_ref().and_then(|m| m.class_names.get(class)).map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Sets the per-query budget. A zero `time_limit_seconds` disables the
/// time limit.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn abduce_model_set_budget(
    model: *mut AbduceModel,
    node_limit: u64,
    time_limit_seconds: f64,
) -> AbduceStatus {
    guard(|| {
        let model = out_ref(model, "model")?;
        if !(time_limit_seconds >= 0.0 && time_limit_seconds.is_finite()) || node_limit == 0 {
            return fail(AbduceStatus::InvalidArgument, "budget must be positive and finite");
        }
        let time_limit = (time_limit_seconds > 0.0).then(|| Duration::from_secs_f64(time_limit_seconds));
        model.budget = Budget { node_limit, time_limit };
        Ok(())
    })
}

/// Predicted class of a total instance.
///
/// # Safety
/// `values` must hold `num_values` NUL-terminated strings; `out_class`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn abduce_predict(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    out_class: *mut usize,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let instance = model.instance(values, num_values)?;
        let out = out_ref(out_class, "out_class")?;
        *out = model.oracle().predict(&instance)?.class;
        Ok(())
    })
}

/// Whether fixing the listed features to their instance values forces
/// class `target`.
///
/// # Safety
/// As for [`abduce_predict`]; `fixed` must hold `num_fixed` indices.
#[no_mangle]
pub unsafe extern "C" fn abduce_entails(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    fixed: *const usize,
    num_fixed: usize,
    target: usize,
    out_entails: *mut bool,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        model.check_class(target)?;
        let instance = model.instance(values, num_values)?;
        let cube = model.candidate(&instance, fixed, num_fixed)?;
        let out = out_ref(out_entails, "out_entails")?;
        *out = model.oracle().entails(&cube, target)?;
        Ok(())
    })
}

/// Explanation of the predicted class of an instance.
///
/// # Safety
/// As for [`abduce_predict`]; `out_features` must hold
/// `abduce_model_num_features` entries.
#[no_mangle]
pub unsafe extern "C" fn abduce_explain(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    mode: AbduceMinimality,
    out_features: *mut usize,
    out_len: *mut usize,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let instance = model.instance(values, num_values)?;
        let oracle = model.oracle();
        let target = oracle.predict(&instance)?.class;
        let e = Explainer::new(&oracle).explain(&instance, target, minimality(mode))?;
        write_features(&e.literals, out_features, out_len)
    })
}

/// Checks a candidate explanation. On success `out_valid` tells whether it
/// entails the prediction.
///
/// # Safety
/// As for [`abduce_entails`].
#[no_mangle]
pub unsafe extern "C" fn abduce_validate(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    candidate: *const usize,
    num_candidate: usize,
    out_valid: *mut bool,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let instance = model.instance(values, num_values)?;
        let cube = model.candidate(&instance, candidate, num_candidate)?;
        let oracle = model.oracle();
        let target = oracle.predict(&instance)?.class;
        let out = out_ref(out_valid, "out_valid")?;
        *out = Explainer::new(&oracle).validate(&instance, target, &cube)?.is_none();
        Ok(())
    })
}

/// Subset-minimal explanation that keeps the candidate's features longest.
///
/// # Safety
/// As for [`abduce_explain`]; `candidate` must hold `num_candidate` indices.
#[no_mangle]
pub unsafe extern "C" fn abduce_repair(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    candidate: *const usize,
    num_candidate: usize,
    out_features: *mut usize,
    out_len: *mut usize,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let instance = model.instance(values, num_values)?;
        let cube = model.candidate(&instance, candidate, num_candidate)?;
        let oracle = model.oracle();
        let target = oracle.predict(&instance)?.class;
        let e = Explainer::new(&oracle).repair(&instance, target, &cube)?;
        write_features(&e.literals, out_features, out_len)
    })
}

/// Minimal explanation inside an entailing candidate; fails with
/// `NotEntailing` otherwise.
///
/// # Safety
/// As for [`abduce_repair`].
#[no_mangle]
pub unsafe extern "C" fn abduce_refine(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    candidate: *const usize,
    num_candidate: usize,
    mode: AbduceMinimality,
    out_features: *mut usize,
    out_len: *mut usize,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let instance = model.instance(values, num_values)?;
        let cube = model.candidate(&instance, candidate, num_candidate)?;
        let oracle = model.oracle();
        let target = oracle.predict(&instance)?.class;
        let e = Explainer::new(&oracle).refine(&instance, target, &cube, minimality(mode))?;
        write_features(&e.literals, out_features, out_len)
    })
}

/// Classifies a candidate and returns its corrected explanation: the repair
/// of an optimistic candidate, the refinement of any other.
///
/// # Safety
/// As for [`abduce_repair`]; `out_status` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abduce_audit(
    model: *const AbduceModel,
    values: *const *const c_char,
    num_values: usize,
    candidate: *const usize,
    num_candidate: usize,
    out_status: *mut AbduceAuditStatus,
    out_features: *mut usize,
    out_len: *mut usize,
) -> AbduceStatus {
    guard(|| {
        let model = model_ref(model)?;
        let instance = model.instance(values, num_values)?;
        let cube = model.candidate(&instance, candidate, num_candidate)?;
        let oracle = model.oracle();
        let target = oracle.predict(&instance)?.class;
        let verdict = audit(&Explainer::new(&oracle), &instance, target, &cube)?;
        if let Some(e) = verdict.incomplete {
            return Err(e.into());
        }
        let corrected = match verdict.corrected() {
            Some(e) => e,
            None => return fail(AbduceStatus::Internal, "audit produced no corrected explanation"),
        };
        let status = out_ref(out_status, "out_status")?;
        *status = match verdict.status {
            Status::Optimistic => AbduceAuditStatus::Optimistic,
            Status::Pessimistic => AbduceAuditStatus::Pessimistic,
            Status::Realistic => AbduceAuditStatus::Realistic,
        };
        write_features(&corrected.literals, out_features, out_len)
    })
}
