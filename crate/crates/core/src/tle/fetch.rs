//! Remote TLE catalog retrieval with a per-day file cache.
//!
//! Cache layout: `<cache_dir>/<group>/<YYYY-MM-DD>.tle`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network unavailable: {0}")]
    NetworkUnavailable(String),
    #[error("HTTP status {0}")]
    HttpStatus(u16),
    #[error("empty response body")]
    EmptyResponse,
    #[error("cache I/O error: {0}")]
    Cache(#[from] io::Error),
}

pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Minimal GET abstraction so tests never touch the network.
pub trait Transport {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError>;
}

/// Blocking HTTP transport backed by `ureq`.
#[derive(Debug, Default)]
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError> {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        let mut resp = agent
            .get(url)
            .call()
            .map_err(|e| FetchError::NetworkUnavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        let mut body = Vec::new();
        resp.body_mut()
            .as_reader()
            .read_to_end(&mut body)
            .map_err(|e| FetchError::NetworkUnavailable(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

pub fn group_url(endpoint: &str, group: &str) -> String {
    let sep = if endpoint.contains('?') { '&' } else { '?' };
    format!("{endpoint}{sep}GROUP={group}&FORMAT=tle")
}

pub fn cache_path(cache_dir: &Path, group: &str, date: NaiveDate) -> PathBuf {
    cache_dir.join(group).join(format!("{}.tle", date.format("%Y-%m-%d")))
}

/// Return the TLE text for `group`, serving from the cache when a file for
/// `date` exists. With `transport == None` (offline) a cache miss is an error.
pub fn fetch_tle_group(
    transport: Option<&dyn Transport>,
    endpoint: &str,
    group: &str,
    cache_dir: &Path,
    date: NaiveDate,
) -> Result<String, FetchError> {
    let path = cache_path(cache_dir, group, date);
    match fs::read_to_string(&path) {
        Ok(text) => return Ok(text),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(e.into()),
    }
    let Some(transport) = transport else {
        return Err(FetchError::NetworkUnavailable(format!(
            "offline and no cache entry at {}",
            path.display()
        )));
    };
    let resp = transport.get(&group_url(endpoint, group))?;
    if !(200..300).contains(&resp.status) {
        return Err(FetchError::HttpStatus(resp.status));
    }
    let text = String::from_utf8_lossy(&resp.body).into_owned();
    if text.trim().is_empty() {
        return Err(FetchError::EmptyResponse);
    }
    write_atomic(&path, text.as_bytes())?;
    Ok(text)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
