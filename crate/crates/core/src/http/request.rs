use std::collections::HashMap;
use std::fmt::Write as _;

use percent_encoding::percent_decode_str;
use thiserror::Error;

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 1024 * 1024;
/// Largest accepted request line plus headers.
pub const MAX_HEAD_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RequestError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unsupported method `{0}`")]
    UnsupportedMethod(String),
    #[error("payload of {0} bytes exceeds the 1 MiB limit")]
    PayloadTooLarge(usize),
    #[error("unsupported content type `{0}`")]
    UnsupportedMediaType(String),
}

impl RequestError {
    pub fn status(&self) -> u16 {
        match self {
            RequestError::BadRequest(_) => 400,
            RequestError::UnsupportedMethod(_) => 405,
            RequestError::PayloadTooLarge(_) => 413,
            RequestError::UnsupportedMediaType(_) => 415,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: Method,
    pub path: String,
    pub query_params: HashMap<String, String>,
    pub body_params: HashMap<String, String>,
    /// Header names are lower-cased.
    pub headers: HashMap<String, String>,
    pub cookies: HashMap<String, String>,
}

impl HttpRequest {
    pub fn get(path: impl Into<String>) -> Self {
        HttpRequest {
            method: Method::Get,
            path: path.into(),
            query_params: HashMap::new(),
            body_params: HashMap::new(),
            headers: HashMap::new(),
            cookies: HashMap::new(),
        }
    }

    pub fn post<K: Into<String>, V: Into<String>>(
        path: impl Into<String>,
        params: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        let mut req = Self::get(path);
        req.method = Method::Post;
        req.body_params = params
            .into_iter()
            .map(|(k, v)| (k.into(), v.into()))
            .collect();
        req
    }

    pub fn with_cookie(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.cookies.insert(name.into(), value.into());
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .get(&name.to_ascii_lowercase())
            .map(String::as_str)
    }

    pub fn cookie(&self, name: &str) -> Option<&str> {
        self.cookies.get(name).map(String::as_str)
    }

    /// Query and body parameters merged; body values win.
    pub fn params(&self) -> HashMap<String, String> {
        let mut all = self.query_params.clone();
        all.extend(self.body_params.iter().map(|(k, v)| (k.clone(), v.clone())));
        all
    }
}

fn decode_form(bytes: &[u8]) -> HashMap<String, String> {
    form_urlencoded::parse(bytes).into_owned().collect()
}

fn parse_cookies(header: &str, into: &mut HashMap<String, String>) {
    for pair in header.split(';') {
        if let Some((k, v)) = pair.split_once('=') {
            let k = k.trim();
            if !k.is_empty() {
                into.insert(k.to_string(), v.trim().trim_matches('"').to_string());
            }
        }
    }
}

/// Offset just past the blank line ending the head, if present.
pub fn head_end(bytes: &[u8]) -> Option<usize> {
    bytes
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .map(|p| p + 4)
}

/// Parses a complete HTTP/1.x request (head plus `Content-Length` body).
pub fn parse_request(bytes: &[u8]) -> Result<HttpRequest, RequestError> {
    let bad = |m: &str| RequestError::BadRequest(m.to_string());
    let end = head_end(bytes).ok_or_else(|| bad("incomplete request head"))?;
    if end > MAX_HEAD_BYTES {
        return Err(bad("request head too large"));
    }
    let head = std::str::from_utf8(&bytes[..end - 4]).map_err(|_| bad("head is not UTF-8"))?;
    let mut lines = head.split("\r\n");
    let request_line = lines.next().unwrap_or_default();
    let parts: Vec<&str> = request_line.split(' ').collect();
    let [method, target, version] = parts[..] else {
        return Err(bad("malformed request line"));
    };
    if !version.starts_with("HTTP/1.") {
        return Err(bad("unsupported protocol version"));
    }
    let method = match method {
        "GET" => Method::Get,
        "POST" => Method::Post,
        "" => return Err(bad("malformed request line")),
        other => return Err(RequestError::UnsupportedMethod(other.to_string())),
    };
    if !target.starts_with('/') {
        return Err(bad("request target must start with `/`"));
    }
    let (raw_path, query) = match target.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (target, None),
    };
    let path = percent_decode_str(raw_path)
        .decode_utf8()
        .map_err(|_| bad("path is not UTF-8"))?
        .into_owned();

    let mut headers = HashMap::new();
    let mut cookies = HashMap::new();
    for line in lines {
        let (name, value) = line
            .split_once(':')
            .ok_or_else(|| bad("malformed header line"))?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(bad("malformed header name"));
        }
        let name = name.to_ascii_lowercase();
        let value = value.trim();
        if name == "cookie" {
            parse_cookies(value, &mut cookies);
        }
        headers.insert(name, value.to_string());
    }

    if headers.contains_key("transfer-encoding") {
        return Err(bad("transfer-encoding is not supported"));
    }
    let body = &bytes[end..];
    let declared = match headers.get("content-length") {
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| bad("invalid content-length"))?,
        None => 0,
    };
    if declared > MAX_BODY_BYTES {
        return Err(RequestError::PayloadTooLarge(declared));
    }
    if body.len() != declared {
        return Err(bad("body length does not match content-length"));
    }

    let mut body_params = HashMap::new();
    if !body.is_empty() {
        let content_type = headers
            .get("content-type")
            .map(String::as_str)
            .unwrap_or("");
        let mime = content_type.split(';').next().unwrap_or("").trim();
        if !(mime.is_empty() || mime.eq_ignore_ascii_case("application/x-www-form-urlencoded")) {
            return Err(RequestError::UnsupportedMediaType(mime.to_string()));
        }
        body_params = decode_form(body);
    }

    Ok(HttpRequest {
        method,
        path,
        query_params: query.map(|q| decode_form(q.as_bytes())).unwrap_or_default(),
        body_params,
        headers,
        cookies,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

pub fn reason_phrase(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        413 => "Payload Too Large",
        415 => "Unsupported Media Type",
        500 => "Internal Server Error",
        508 => "Loop Detected",
        _ => "Unknown",
    }
}

impl HttpResponse {
    pub fn new(status: u16, content_type: &str, body: impl Into<Vec<u8>>) -> Self {
        HttpResponse {
            status,
            headers: vec![("Content-Type".into(), content_type.into())],
            body: body.into(),
        }
    }

    pub fn html(status: u16, body: impl Into<Vec<u8>>) -> Self {
        Self::new(status, "text/html; charset=utf-8", body)
    }

    pub fn error(status: u16) -> Self {
        let reason = reason_phrase(status);
        Self::html(
            status,
            format!("<!DOCTYPE html>\n<html><body><h1>{status} {reason}</h1></body></html>\n"),
        )
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn body_text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    /// Wire form. `Content-Length` always reflects the body.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = format!(
            "HTTP/1.1 {} {}\r\n",
            self.status,
            reason_phrase(self.status)
        );
        for (k, v) in &self.headers {
            if k.eq_ignore_ascii_case("content-length") || k.eq_ignore_ascii_case("connection") {
                continue;
            }
            let _ = write!(head, "{k}: {v}\r\n");
        }
        let _ = write!(
            head,
            "Content-Length: {}\r\nConnection: close\r\n\r\n",
            self.body.len()
        );
        let mut out = head.into_bytes();
        out.extend_from_slice(&self.body);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(body: &str) -> Vec<u8> {
        format!(
            "POST /Login HTTP/1.1\r\nHost: x\r\nContent-Type: application/x-www-form-urlencoded\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        )
        .into_bytes()
    }

    #[test]
    fn parses_login_post() {
        let req = parse_request(&post("userName=u&password=p&choice=citizen")).unwrap();
        assert_eq!(req.method, Method::Post);
        assert_eq!(req.path, "/Login");
        assert_eq!(req.body_params.len(), 3);
        assert_eq!(req.body_params["choice"], "citizen");
    }

    #[test]
    fn parses_bare_get() {
        let req = parse_request(b"GET / HTTP/1.1\r\n\r\n").unwrap();
        assert_eq!(req.method, Method::Get);
        assert_eq!(req.path, "/");
        assert!(req.params().is_empty());
    }

    #[test]
    fn decodes_form_escapes() {
        let req = parse_request(&post("a=%26&b=c+d")).unwrap();
        assert_eq!(req.body_params["a"], "&");
        assert_eq!(req.body_params["b"], "c d");
    }

    #[test]
    fn query_cookies_and_path_decoding() {
        let req = parse_request(
            b"GET /a%20b?x=1&y=%C3%A9 HTTP/1.1\r\nCookie: RCISESSIONID=abc; other=\"q\"\r\n\r\n",
        )
        .unwrap();
        assert_eq!(req.path, "/a b");
        assert_eq!(req.query_params["y"], "é");
        assert_eq!(req.cookie("RCISESSIONID"), Some("abc"));
        assert_eq!(req.cookie("other"), Some("q"));
    }

    #[test]
    fn rejections() {
        assert_eq!(
            parse_request(b"DELETE / HTTP/1.1\r\n\r\n"),
            Err(RequestError::UnsupportedMethod("DELETE".into()))
        );
        assert!(matches!(
            parse_request(b"GET /\r\n\r\n"),
            Err(RequestError::BadRequest(_))
        ));
        assert!(matches!(
            parse_request(b"GET / HTTP/1.1\r\nnocolon\r\n\r\n"),
            Err(RequestError::BadRequest(_))
        ));
        assert!(matches!(
            parse_request(b"GET x HTTP/1.1\r\n\r\n"),
            Err(RequestError::BadRequest(_))
        ));
        assert!(matches!(
            parse_request(b"GET / HTTP/1.1\r\n"),
            Err(RequestError::BadRequest(_))
        ));
        assert_eq!(
            parse_request(b"POST / HTTP/1.1\r\nContent-Length: 2000000\r\n\r\n"),
            Err(RequestError::PayloadTooLarge(2_000_000))
        );
        assert!(matches!(
            parse_request(b"POST / HTTP/1.1\r\nContent-Length: 5\r\n\r\nab"),
            Err(RequestError::BadRequest(_))
        ));
        assert!(matches!(
            parse_request(
                b"POST / HTTP/1.1\r\nContent-Type: text/plain\r\nContent-Length: 1\r\n\r\na"
            ),
            Err(RequestError::UnsupportedMediaType(_))
        ));
    }

    #[test]
    fn response_wire_form() {
        let resp = HttpResponse::html(200, "hi");
        let text = String::from_utf8(resp.to_bytes()).unwrap();
        assert!(text.starts_with("HTTP/1.1 200 OK\r\n"));
        assert!(text.contains("Content-Length: 2\r\n"));
        assert!(text.ends_with("\r\n\r\nhi"));
    }
}
