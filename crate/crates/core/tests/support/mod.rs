#![allow(dead_code)]

pub mod strategies;

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::time::Duration;

use strutskit::portal::{build_portal_with, AssetDirs, Portal, PortalOptions, Role};

/// The login configuration exactly as the portal's original project wrote it.
pub const LOGIN_CONFIG: &str = r#"<struts-config>
  <form-beans>
    <form-bean name="LoginForm" type="com.pawan.LoginForm"/>
  </form-beans>
  <global-exceptions>
  </global-exceptions>
  <global-forwards>
    <forward name="welcome" path="/Welcome.do"/>
  </global-forwards>
  <action-mappings>
    <action input="/login.jsp" name="LoginForm" path="/Login" scope="session" type="com.pawan.LoginAction">
      <forward name="citizen" path="/citizen_home.jsp" />
      <forward name="employee" path="/employee_home.jsp" />
      <forward name="hospital" path="/hospital_home.jsp" />
      <forward name="admin" path="/admin_home.jsp" />
      <forward name="school" path="/school_home.jsp" />
      <forward name="failure" path="/failure.jsp" />
    </action>
    <action path="/Welcome" forward="/welcomeStruts.jsp"/>
  </action-mappings>
</struts-config>
"#;

/// Login configuration with declared form properties and the registration action.
pub const PORTAL_CONFIG: &str = r#"<struts-config>
  <form-beans>
    <form-bean name="LoginForm" type="com.pawan.LoginForm">
      <form-property name="choice"/>
      <form-property name="userName"/>
      <form-property name="password"/>
    </form-bean>
    <form-bean name="RegisterForm" type="com.pawan.RegisterForm">
      <form-property name="emailid"/>
      <form-property name="password"/>
    </form-bean>
  </form-beans>
  <global-forwards>
    <forward name="welcome" path="/Welcome.do"/>
  </global-forwards>
  <action-mappings>
    <action input="/login.jsp" name="LoginForm" path="/Login" scope="session" type="com.pawan.LoginAction">
      <forward name="citizen" path="/citizen_home.jsp" />
      <forward name="employee" path="/employee_home.jsp" />
      <forward name="hospital" path="/hospital_home.jsp" />
      <forward name="admin" path="/admin_home.jsp" />
      <forward name="school" path="/school_home.jsp" />
      <forward name="failure" path="/failure.jsp" />
    </action>
    <action input="/register.jsp" name="RegisterForm" path="/Register" type="com.pawan.RegisterAction">
      <forward name="registered" path="/login.jsp" />
      <forward name="duplicate" path="/register.jsp" />
    </action>
    <action path="/Welcome" forward="/welcome.jsp"/>
  </action-mappings>
</struts-config>
"#;

pub const MESSAGES: &str = "error.userName.required = User Name is required.\n\
error.password.required = Password is required.\n\
error.emailid.required = Email Id is required.\n";

pub const WEB_XML: &str = "<web-app><welcome-file-list><welcome-file>welcome.jsp</welcome-file></welcome-file-list></web-app>\n";

pub const LOGIN_TEMPLATE: &str = r#"view:login
<div style="color:red">{{errors}}</div>
{{form action="/Login"}}{{select property="choice"}}{{option value="employee"}}Employee{{/option}}{{option value="citizen"}}Citizen{{/option}}{{option value="hospital"}}Hospital{{/option}}{{option value="school"}}School{{/option}}{{/select}}
{{text property="userName" size="15"}}{{password property="password" size="15"}}{{submit value="Login"}}{{/form}}
"#;

pub const REGISTER_TEMPLATE: &str = r#"view:register
{{errors}}{{form action="/Register"}}{{text property="emailid"}}{{password property="password"}}{{submit value="Register"}}{{/form}}
"#;

/// Minimal inline templates, each tagged with a `view:<name>` marker line.
pub fn minimal_templates() -> Vec<(String, String)> {
    let mut t = vec![
        ("login.tpl".to_string(), LOGIN_TEMPLATE.to_string()),
        ("register.tpl".to_string(), REGISTER_TEMPLATE.to_string()),
        ("welcome.tpl".to_string(), "view:welcome\n".to_string()),
        ("failure.tpl".to_string(), "view:failure\n".to_string()),
    ];
    for role in Role::ALL {
        t.push((
            format!("{role}_home.tpl"),
            format!("view:{role}_home\nuser=[{{{{write name=\"sessUserName\"}}}}]\n"),
        ));
    }
    t
}

pub fn marker(body: &str) -> Option<&str> {
    body.lines().find_map(|l| l.strip_prefix("view:"))
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    /// Config, messages, empty credential tables and minimal templates.
    pub fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        f.write("config/struts-config.xml", PORTAL_CONFIG);
        f.write("config/web.xml", WEB_XML);
        f.write("config/ApplicationResource.properties", MESSAGES);
        for role in Role::ALL {
            f.write(&format!("data/{}.csv", role.table()), "emailid,password\n");
        }
        for (name, text) in minimal_templates() {
            f.write(&format!("templates/{name}"), &text);
        }
        f
    }

    /// A copy of the shipped demo asset tree.
    pub fn demo() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        copy_dir(&demo_root(), f.dir.path());
        f
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn dirs(&self) -> AssetDirs {
        AssetDirs::under(self.root())
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root().join(rel)
    }

    pub fn write(&self, rel: &str, content: &str) {
        let p = self.path(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    pub fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path(rel)).unwrap()
    }

    pub fn remove(&self, rel: &str) {
        fs::remove_file(self.path(rel)).unwrap();
    }

    pub fn edit(&self, rel: &str, from: &str, to: &str) {
        let text = self.read(rel);
        assert!(text.contains(from), "{rel} does not contain {from:?}");
        self.write(rel, &text.replacen(from, to, 1));
    }

    pub fn seed(&self, role: Role, email: &str, password: &str) {
        let rel = format!("data/{}.csv", role.table());
        let mut text = self.read(&rel);
        text.push_str(&format!("{email},{password}\n"));
        self.write(&rel, &text);
    }

    pub fn portal(&self) -> Portal {
        build_portal_with(&self.dirs(), PortalOptions::default()).unwrap_or_else(|e| panic!("{e}"))
    }
}

pub fn demo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demo")
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

#[derive(Debug)]
pub struct WireResponse {
    pub status: u16,
    pub headers: HashMap<String, String>,
    pub body: String,
}

impl WireResponse {
    pub fn session_cookie(&self) -> Option<String> {
        let v = self.headers.get("set-cookie")?;
        strutskit::http::session::session_id_from_set_cookie(v).map(str::to_string)
    }
}

pub fn send_raw(addr: SocketAddr, raw: &[u8]) -> WireResponse {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream
        .set_read_timeout(Some(Duration::from_secs(10)))
        .unwrap();
    stream.write_all(raw).unwrap();
    let mut buf = Vec::new();
    stream.read_to_end(&mut buf).unwrap();
    let text = String::from_utf8_lossy(&buf).into_owned();
    let (head, body) = text.split_once("\r\n\r\n").expect("response head");
    let mut lines = head.split("\r\n");
    let status = lines
        .next()
        .unwrap()
        .split(' ')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let headers = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
        .collect();
    WireResponse {
        status,
        headers,
        body: body.to_string(),
    }
}

pub fn encode_form(params: &[(&str, &str)]) -> String {
    let mut s = form_urlencoded::Serializer::new(String::new());
    for (k, v) in params {
        s.append_pair(k, v);
    }
    s.finish()
}

pub fn http_get(addr: SocketAddr, path: &str, session: Option<&str>) -> WireResponse {
    let cookie = session
        .map(|s| format!("Cookie: RCISESSIONID={s}\r\n"))
        .unwrap_or_default();
    send_raw(
        addr,
        format!("GET {path} HTTP/1.1\r\nHost: t\r\n{cookie}\r\n").as_bytes(),
    )
}

pub fn http_post(
    addr: SocketAddr,
    path: &str,
    params: &[(&str, &str)],
    session: Option<&str>,
) -> WireResponse {
    let body = encode_form(params);
    let cookie = session
        .map(|s| format!("Cookie: RCISESSIONID={s}\r\n"))
        .unwrap_or_default();
    send_raw(
        addr,
        format!(
            "POST {path} HTTP/1.1\r\nHost: t\r\n{cookie}Content-Type: application/x-www-form-urlencoded\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        )
        .as_bytes(),
    )
}

/// A deliberately broken asset tree and a token `check` must name.
pub struct Breakage {
    pub label: &'static str,
    pub apply: fn(&Fixture),
    pub names: &'static str,
}

pub fn breakages() -> Vec<Breakage> {
    vec![
        Breakage {
            label: "dangling forward",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    r#"<forward name="failure" path="/failure.jsp" />"#,
                    "",
                )
            },
            names: "forward `failure`",
        },
        Breakage {
            label: "duplicate action path",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    "</action-mappings>",
                    r#"<action path="/Welcome" forward="/login.jsp"/></action-mappings>"#,
                )
            },
            names: "/Welcome",
        },
        Breakage {
            label: "missing form bean",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    r#"name="RegisterForm" path"#,
                    r#"name="GhostForm" path"#,
                )
            },
            names: "GhostForm",
        },
        Breakage {
            label: "missing message key",
            apply: |f| {
                f.edit(
                    "config/ApplicationResource.properties",
                    "error.password.required = Password is required.\n",
                    "",
                )
            },
            names: "error.password.required",
        },
        Breakage {
            label: "missing view template",
            apply: |f| f.remove("templates/hospital_home.tpl"),
            names: "hospital_home",
        },
        Breakage {
            label: "ragged csv row",
            apply: |f| {
                f.write(
                    "data/school_signup_details.csv",
                    "emailid,password\na@x.in,p,extra\n",
                )
            },
            names: "school_signup_details",
        },
        Breakage {
            label: "malformed xml",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    "</struts-config>",
                    "</struts-confi",
                )
            },
            names: "struts-config.xml",
        },
        Breakage {
            label: "unknown element",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    "<global-forwards>",
                    "<plug-in/><global-forwards>",
                )
            },
            names: "plug-in",
        },
        Breakage {
            label: "unregistered action type",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    "com.pawan.RegisterAction",
                    "com.pawan.GhostAction",
                )
            },
            names: "com.pawan.GhostAction",
        },
        Breakage {
            label: "missing credential table",
            apply: |f| f.remove("data/admin_signup_details.csv"),
            names: "admin_signup_details",
        },
        Breakage {
            label: "template binds undeclared property",
            apply: |f| {
                f.edit(
                    "templates/login.tpl",
                    r#"property="userName""#,
                    r#"property="userNme""#,
                )
            },
            names: "userNme",
        },
        Breakage {
            label: "forward to unknown action",
            apply: |f| {
                f.edit(
                    "config/struts-config.xml",
                    r#"path="/Welcome.do""#,
                    r#"path="/Ghost.do""#,
                )
            },
            names: "/Ghost",
        },
        Breakage {
            label: "unresolvable welcome file",
            apply: |f| f.edit("config/web.xml", "welcome.jsp", "nothing.jsp"),
            names: "nothing.jsp",
        },
    ]
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = strutskit::cli::run(
        std::iter::once("strutskit").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

impl Fixture {
    pub fn cli_args(&self) -> Vec<String> {
        let d = self.dirs();
        vec![
            "--config".into(),
            d.config.display().to_string(),
            "--data".into(),
            d.data.display().to_string(),
            "--templates".into(),
            d.templates.display().to_string(),
        ]
    }

    pub fn check(&self) -> (i32, String, String) {
        let args = self.cli_args();
        let mut argv = vec!["check"];
        argv.extend(args.iter().map(String::as_str));
        run_cli(&argv)
    }
}
