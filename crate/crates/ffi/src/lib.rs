//! C ABI over the strutskit core: load a portal, answer raw HTTP requests,
//! run the static checker and inspect framework configs.
//!
//! Every function returns a [`StrutskitStatus`]. On failure a message is
//! available from [`strutskit_last_error_message`] on the same thread.
//! Strings and buffers handed out by this library must be released with
//! [`strutskit_string_free`] and [`strutskit_buffer_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use strutskit::cli::routes_table;
use strutskit::config::{parse_framework_config, FrameworkConfig};
use strutskit::http::{parse_request, HttpResponse};
use strutskit::portal::{inspect, AssetDirs, Portal, PortalOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrutskitStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    StartupFailed = 3,
    InvalidConfig = 4,
    NotFound = 5,
    Panic = 6,
}

/// A loaded portal: config, templates, credential store and sessions.
pub struct StrutskitApp {
    portal: Portal,
}

/// A parsed framework config.
pub struct StrutskitConfig {
    config: FrameworkConfig,
}

/// Bytes owned by the library.
#[repr(C)]
pub struct StrutskitBuffer {
    pub data: *mut u8,
    pub len: usize,
}

impl StrutskitBuffer {
    fn empty() -> Self {
        StrutskitBuffer {
            data: ptr::null_mut(),
            len: 0,
        }
    }

    fn from_vec(bytes: Vec<u8>) -> Self {
        let boxed = bytes.into_boxed_slice();
        let len = boxed.len();
        StrutskitBuffer {
            data: Box::into_raw(boxed) as *mut u8,
            len,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: StrutskitStatus, message: impl Into<String>) -> StrutskitStatus {
    set_last_error(message);
    status
}

fn guard(body: impl FnOnce() -> StrutskitStatus) -> StrutskitStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    panic::catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| fail(StrutskitStatus::Panic, "internal panic"))
}

/// # Safety
/// `ptr` is null or a NUL-terminated string valid for reads.
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, StrutskitStatus> {
    if ptr.is_null() {
        return Err(fail(
            StrutskitStatus::NullArgument,
            format!("`{what}` is null"),
        ));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        fail(
            StrutskitStatus::InvalidUtf8,
            format!("`{what}` is not UTF-8"),
        )
    })
}

fn into_c_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .expect("NULs removed")
        .into_raw()
}

/// Loads and cross-checks the asset directories. On success `*out_app`
/// receives a handle to free with [`strutskit_app_free`].
///
/// # Safety
/// The path arguments are NUL-terminated strings; `out_app` is writable.
#[no_mangle]
pub unsafe extern "C" fn strutskit_app_open(
    config_dir: *const c_char,
    data_dir: *const c_char,
    template_dir: *const c_char,
    out_app: *mut *mut StrutskitApp,
) -> StrutskitStatus {
    guard(|| {
        if out_app.is_null() {
            return fail(StrutskitStatus::NullArgument, "`out_app` is null");
        }
        *out_app = ptr::null_mut();
        let dirs = match (
            read_str(config_dir, "config_dir"),
            read_str(data_dir, "data_dir"),
            read_str(template_dir, "template_dir"),
        ) {
            (Ok(c), Ok(d), Ok(t)) => {
                AssetDirs::new(PathBuf::from(c), PathBuf::from(d), PathBuf::from(t))
            }
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        match inspect(&dirs, PortalOptions::default()) {
            (Some(portal), _) => {
                *out_app = Box::into_raw(Box::new(StrutskitApp { portal }));
                StrutskitStatus::Ok
            }
            (None, report) => {
                let lines: Vec<String> = report.errors().map(|f| f.to_string()).collect();
                fail(StrutskitStatus::StartupFailed, lines.join("\n"))
            }
        }
    })
}

/// # Safety
/// `app` is null or a handle from [`strutskit_app_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strutskit_app_free(app: *mut StrutskitApp) {
    if !app.is_null() {
        drop(Box::from_raw(app));
    }
}

/// Answers one raw HTTP/1.1 request. `*out_response` receives the full
/// response (status line, headers, body). Malformed requests produce the
/// matching 4xx response rather than an error status.
///
/// # Safety
/// `app` is a live handle; `request` points to `request_len` readable
/// bytes; `out_response` is writable.
#[no_mangle]
pub unsafe extern "C" fn strutskit_app_handle_request(
    app: *const StrutskitApp,
    request: *const u8,
    request_len: usize,
    out_response: *mut StrutskitBuffer,
) -> StrutskitStatus {
    guard(|| {
        if out_response.is_null() {
            return fail(StrutskitStatus::NullArgument, "`out_response` is null");
        }
        *out_response = StrutskitBuffer::empty();
        if app.is_null() {
            return fail(StrutskitStatus::NullArgument, "`app` is null");
        }
        if request.is_null() {
            return fail(StrutskitStatus::NullArgument, "`request` is null");
        }
        let raw = std::slice::from_raw_parts(request, request_len);
        let response = match parse_request(raw) {
            Ok(req) => (*app).portal.app.dispatch(&req).0,
            Err(e) => HttpResponse::error(e.status()),
        };
        *out_response = StrutskitBuffer::from_vec(response.to_bytes());
        StrutskitStatus::Ok
    })
}

/// Runs the static checker. `*out_report` receives one finding per line
/// followed by an `N errors, M warnings` summary; `*out_errors` receives
/// the error count.
///
/// # Safety
/// The path arguments are NUL-terminated strings; the out pointers are
/// writable.
#[no_mangle]
pub unsafe extern "C" fn strutskit_check(
    config_dir: *const c_char,
    data_dir: *const c_char,
    template_dir: *const c_char,
    out_report: *mut *mut c_char,
    out_errors: *mut usize,
) -> StrutskitStatus {
    guard(|| {
        if out_report.is_null() || out_errors.is_null() {
            return fail(StrutskitStatus::NullArgument, "output pointer is null");
        }
        *out_report = ptr::null_mut();
        *out_errors = 0;
        let dirs = match (
            read_str(config_dir, "config_dir"),
            read_str(data_dir, "data_dir"),
            read_str(template_dir, "template_dir"),
        ) {
            (Ok(c), Ok(d), Ok(t)) => {
                AssetDirs::new(PathBuf::from(c), PathBuf::from(d), PathBuf::from(t))
            }
            (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
        };
        let (_, report) = inspect(&dirs, PortalOptions::default());
        let mut text: String = report.findings.iter().map(|f| format!("{f}\n")).collect();
        text.push_str(&format!(
            "{} errors, {} warnings\n",
            report.error_count(),
            report.warning_count()
        ));
        *out_errors = report.error_count();
        *out_report = into_c_string(text);
        StrutskitStatus::Ok
    })
}

/// Parses a framework config document. On success `*out_config`
/// receives a handle to free with [`strutskit_config_free`].
///
/// # Safety
/// `xml` is a NUL-terminated string; `out_config` is writable.
#[no_mangle]
pub unsafe extern "C" fn strutskit_config_parse(
    xml: *const c_char,
    out_config: *mut *mut StrutskitConfig,
) -> StrutskitStatus {
    guard(|| {
        if out_config.is_null() {
            return fail(StrutskitStatus::NullArgument, "`out_config` is null");
        }
        *out_config = ptr::null_mut();
        let text = match read_str(xml, "xml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_framework_config(text) {
            Ok(config) => {
                *out_config = Box::into_raw(Box::new(StrutskitConfig { config }));
                StrutskitStatus::Ok
            }
            Err(e) => fail(StrutskitStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// # Safety
/// `config` is null or a handle from [`strutskit_config_parse`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn strutskit_config_free(config: *mut StrutskitConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of action mappings, or 0 for a null handle.
///
/// # Safety
/// `config` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn strutskit_config_mapping_count(config: *const StrutskitConfig) -> usize {
    if config.is_null() {
        return 0;
    }
    (*config).config.action_mappings.len()
}

/// Resolves `forward_name` for the mapping that answers `action_path`,
/// local forwards first, then global ones. `*out_path` receives the
/// target path.
///
/// # Safety
/// `config` is a live handle; the string arguments are NUL-terminated;
/// `out_path` is writable.
#[no_mangle]
pub unsafe extern "C" fn strutskit_config_resolve_forward(
    config: *const StrutskitConfig,
    action_path: *const c_char,
    forward_name: *const c_char,
    out_path: *mut *mut c_char,
) -> StrutskitStatus {
    guard(|| {
        if out_path.is_null() {
            return fail(StrutskitStatus::NullArgument, "`out_path` is null");
        }
        *out_path = ptr::null_mut();
        if config.is_null() {
            return fail(StrutskitStatus::NullArgument, "`config` is null");
        }
        let (path, name) = match (
            read_str(action_path, "action_path"),
            read_str(forward_name, "forward_name"),
        ) {
            (Ok(p), Ok(n)) => (p, n),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let cfg = &(*config).config;
        let resolved = cfg
            .resolve_action(path)
            .and_then(|mapping| cfg.resolve_forward(mapping, name));
        match resolved {
            Ok(forward) => {
                *out_path = into_c_string(forward.path.clone());
                StrutskitStatus::Ok
            }
            Err(e) => fail(StrutskitStatus::NotFound, e.to_string()),
        }
    })
}

/// Renders the route table, one mapping per line sorted by path.
///
/// # Safety
/// `config` is a live handle; `out_table` is writable.
#[no_mangle]
pub unsafe extern "C" fn strutskit_config_routes(
    config: *const StrutskitConfig,
    out_table: *mut *mut c_char,
) -> StrutskitStatus {
    guard(|| {
        if out_table.is_null() {
            return fail(StrutskitStatus::NullArgument, "`out_table` is null");
        }
        *out_table = ptr::null_mut();
        if config.is_null() {
            return fail(StrutskitStatus::NullArgument, "`config` is null");
        }
        let text: String = routes_table(&(*config).config)
            .into_iter()
            .map(|l| format!("{}\n", l.trim_end()))
            .collect();
        *out_table = into_c_string(text);
        StrutskitStatus::Ok
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn strutskit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` is null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strutskit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `buffer` was filled by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn strutskit_buffer_free(buffer: StrutskitBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(
            buffer.data,
            buffer.len,
        )));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn strutskit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
