use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use strutskit_ffi::*;

const FIG3: &str = r#"<struts-config>
  <form-beans><form-bean name="LoginForm" type="com.pawan.LoginForm"/></form-beans>
  <global-forwards><forward name="welcome" path="/Welcome.do"/></global-forwards>
  <action-mappings>
    <action input="/login.jsp" name="LoginForm" path="/Login" scope="session" type="com.pawan.LoginAction">
      <forward name="citizen" path="/citizen_home.jsp" />
      <forward name="failure" path="/failure.jsp" />
    </action>
    <action path="/Welcome" forward="/welcomeStruts.jsp"/>
  </action-mappings>
</struts-config>"#;

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/demo")
}

fn c(s: impl AsRef<str>) -> CString {
    CString::new(s.as_ref()).unwrap()
}

fn demo_paths() -> [CString; 3] {
    let d = demo();
    ["config", "data", "templates"].map(|sub| c(d.join(sub).display().to_string()))
}

fn last_error() -> String {
    let p = strutskit_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    strutskit_string_free(p);
    s
}

unsafe fn request(app: *const StrutskitApp, raw: &str) -> String {
    let mut out = StrutskitBuffer {
        data: ptr::null_mut(),
        len: 0,
    };
    let status = strutskit_app_handle_request(app, raw.as_ptr(), raw.len(), &mut out);
    assert_eq!(status, StrutskitStatus::Ok);
    let text = String::from_utf8_lossy(std::slice::from_raw_parts(out.data, out.len)).into_owned();
    strutskit_buffer_free(out);
    text
}

#[test]
fn app_answers_raw_requests() {
    let [cfg, data, tpl] = demo_paths();
    let mut app = ptr::null_mut();
    unsafe {
        assert_eq!(
            strutskit_app_open(cfg.as_ptr(), data.as_ptr(), tpl.as_ptr(), &mut app),
            StrutskitStatus::Ok
        );
        assert!(!app.is_null());
        let root = request(app, "GET / HTTP/1.1\r\n\r\n");
        assert!(root.starts_with("HTTP/1.1 200"), "{root}");
        let body = "choice=citizen&userName=&password=";
        let invalid = request(
            app,
            &format!(
                "POST /Login.do HTTP/1.1\r\nContent-Type: application/x-www-form-urlencoded\r\nContent-Length: {}\r\n\r\n{body}",
                body.len()
            ),
        );
        assert!(invalid.contains("User Name is required."));
        assert!(invalid.contains("Set-Cookie: RCISESSIONID="));
        assert!(request(app, "GET /Nowhere.do HTTP/1.1\r\n\r\n").starts_with("HTTP/1.1 404"));
        assert!(request(app, "nonsense\r\n\r\n").starts_with("HTTP/1.1 400"));
        strutskit_app_free(app);
    }
}

#[test]
fn open_reports_startup_findings() {
    let dir = tempfile_dir();
    let p = c(dir.display().to_string());
    let mut app = ptr::null_mut();
    let status = unsafe { strutskit_app_open(p.as_ptr(), p.as_ptr(), p.as_ptr(), &mut app) };
    assert_eq!(status, StrutskitStatus::StartupFailed);
    assert!(app.is_null());
    assert!(last_error().contains("struts-config.xml"));
    let _ = std::fs::remove_dir_all(dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("strutskit-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn check_counts_errors() {
    let [cfg, data, tpl] = demo_paths();
    let mut report = ptr::null_mut();
    let mut errors = usize::MAX;
    unsafe {
        let status = strutskit_check(
            cfg.as_ptr(),
            data.as_ptr(),
            tpl.as_ptr(),
            &mut report,
            &mut errors,
        );
        assert_eq!(status, StrutskitStatus::Ok);
        assert_eq!(errors, 0);
        assert_eq!(take_string(report), "0 errors, 0 warnings\n");
        let missing = c("/nonexistent");
        let status = strutskit_check(
            missing.as_ptr(),
            data.as_ptr(),
            tpl.as_ptr(),
            &mut report,
            &mut errors,
        );
        assert_eq!(status, StrutskitStatus::Ok);
        assert!(errors > 0);
        assert!(take_string(report).contains("ERROR /nonexistent/struts-config.xml"));
    }
}

#[test]
fn config_parse_resolve_and_routes() {
    let xml = c(FIG3);
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(
            strutskit_config_parse(xml.as_ptr(), &mut cfg),
            StrutskitStatus::Ok
        );
        assert_eq!(strutskit_config_mapping_count(cfg), 2);
        let mut out = ptr::null_mut();
        let (login, citizen, welcome, nope) =
            (c("/Login.do"), c("citizen"), c("welcome"), c("nope"));
        assert_eq!(
            strutskit_config_resolve_forward(cfg, login.as_ptr(), citizen.as_ptr(), &mut out),
            StrutskitStatus::Ok
        );
        assert_eq!(take_string(out), "/citizen_home.jsp");
        assert_eq!(
            strutskit_config_resolve_forward(cfg, login.as_ptr(), welcome.as_ptr(), &mut out),
            StrutskitStatus::Ok
        );
        assert_eq!(take_string(out), "/Welcome.do");
        assert_eq!(
            strutskit_config_resolve_forward(cfg, login.as_ptr(), nope.as_ptr(), &mut out),
            StrutskitStatus::NotFound
        );
        assert!(out.is_null());
        assert!(last_error().contains("nope"));
        assert_eq!(strutskit_config_routes(cfg, &mut out), StrutskitStatus::Ok);
        let routes = take_string(out);
        assert_eq!(routes.lines().count(), 3);
        assert!(routes
            .lines()
            .nth(2)
            .unwrap()
            .starts_with("/Welcome  -  request"));
        strutskit_config_free(cfg);
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(
            strutskit_config_parse(ptr::null(), &mut cfg),
            StrutskitStatus::NullArgument
        );
        let bad = c("<struts-config><bogus/></struts-config>");
        assert_eq!(
            strutskit_config_parse(bad.as_ptr(), &mut cfg),
            StrutskitStatus::InvalidConfig
        );
        assert!(last_error().contains("bogus"));
        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            strutskit_config_parse(not_utf8.as_ptr() as *const _, &mut cfg),
            StrutskitStatus::InvalidUtf8
        );
        assert_eq!(strutskit_config_mapping_count(ptr::null()), 0);
        strutskit_config_free(ptr::null_mut());
        strutskit_app_free(ptr::null_mut());
        strutskit_string_free(ptr::null_mut());
    }
    let xml = c(FIG3);
    unsafe {
        assert_eq!(
            strutskit_config_parse(xml.as_ptr(), &mut cfg),
            StrutskitStatus::Ok
        );
        strutskit_config_free(cfg);
    }
    assert!(strutskit_last_error_message().is_null());
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(strutskit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
