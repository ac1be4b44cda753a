//! Minimal HTTP stubs for repository API and model endpoint tests.
#![allow(dead_code)]

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{SystemTime, UNIX_EPOCH};

pub struct StubResponse {
    pub status: u16,
    pub body: Vec<u8>,
    pub headers: Vec<(String, String)>,
}

impl StubResponse {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        Self {
            status: 200,
            body: body.into(),
            headers: Vec::new(),
        }
    }

    pub fn status(status: u16, body: impl Into<Vec<u8>>) -> Self {
        Self {
            status,
            body: body.into(),
            headers: Vec::new(),
        }
    }

    pub fn header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.push((name.to_string(), value.into()));
        self
    }
}

type Handler = dyn Fn(&str, &str, &str) -> StubResponse + Send + Sync;

/// Serves requests on a background thread until dropped.
pub struct StubServer {
    pub base: String,
    server: Arc<tiny_http::Server>,
    hits: Arc<Mutex<Vec<String>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// `handler(method, url, body)` answers every request.
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&str, &str, &str) -> StubResponse + Send + Sync + 'static,
    {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind stub"));
        let base = format!("http://{}", server.server_addr().to_ip().expect("ip addr"));
        let hits = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let (srv, log) = (server.clone(), hits.clone());
        let handle = std::thread::spawn(move || {
            for mut request in srv.incoming_requests() {
                let url = request.url().to_string();
                let method = request.method().to_string();
                let mut body = String::new();
                let _ = request.as_reader().read_to_string(&mut body);
                log.lock().unwrap().push(url.clone());
                let reply = handler(&method, &url, &body);
                let mut response =
                    tiny_http::Response::from_data(reply.body).with_status_code(reply.status);
                for (k, v) in reply.headers {
                    response.add_header(
                        tiny_http::Header::from_bytes(k.as_bytes(), v.as_bytes()).unwrap(),
                    );
                }
                let _ = request.respond(response);
            }
        });
        Self {
            base,
            server,
            hits,
            handle: Some(handle),
        }
    }

    pub fn hits(&self) -> Vec<String> {
        self.hits.lock().unwrap().clone()
    }

    pub fn hit_count(&self, needle: &str) -> usize {
        self.hits().iter().filter(|h| h.contains(needle)).count()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn epoch_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap()
        .as_secs()
}

/// A fake `owner/proj` repository on branch `main`.
///
/// When `rate_limit_once` names a file, its first download answers 403 with
/// exhausted rate-limit headers; later downloads succeed.
pub fn github_stub(
    files: Vec<(&'static str, &'static str)>,
    rate_limit_once: Option<&'static str>,
) -> StubServer {
    let limited = Arc::new(AtomicBool::new(rate_limit_once.is_none()));
    StubServer::start(move |_method, url, _body| {
        let (path, _query) = url.split_once('?').unwrap_or((url, ""));
        match path {
            "/repos/owner/proj" => StubResponse::ok(
                r#"{"full_name":"owner/proj","default_branch":"main","private":false}"#,
            ),
            "/repos/owner/proj/git/trees/main" => {
                let mut tree: Vec<String> = files
                    .iter()
                    .map(|(p, c)| format!(r#"{{"path":"{p}","type":"blob","size":{}}}"#, c.len()))
                    .collect();
                tree.push(r#"{"path":"pkg","type":"tree"}"#.into());
                StubResponse::ok(format!(
                    r#"{{"sha":"abc","tree":[{}],"truncated":false}}"#,
                    tree.join(",")
                ))
            }
            p if p.starts_with("/repos/owner/proj/contents/") => {
                let file = &p["/repos/owner/proj/contents/".len()..];
                if Some(file) == rate_limit_once && !limited.swap(true, Ordering::SeqCst) {
                    return StubResponse::status(403, r#"{"message":"API rate limit exceeded"}"#)
                        .header("x-ratelimit-remaining", "0")
                        .header("x-ratelimit-reset", (epoch_now() + 1).to_string());
                }
                match files.iter().find(|(p, _)| *p == file) {
                    Some((_, content)) => StubResponse::ok(content.as_bytes().to_vec()),
                    None => StubResponse::status(404, r#"{"message":"Not Found"}"#),
                }
            }
            _ => StubResponse::status(404, r#"{"message":"Not Found"}"#),
        }
    })
}
