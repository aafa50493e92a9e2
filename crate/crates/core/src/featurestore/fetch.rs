//! Stock-photo collection through the Unsplash search API.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::featurestore::manifest::ImageRecord;

pub const API_KEY_ENV: &str = "UNSPLASH_ACCESS_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.unsplash.com";
const MAX_PER_PAGE: usize = 30;
const MAX_IMAGE_BYTES: u64 = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub base_url: String,
    /// Request-rate ceiling; `None` disables throttling.
    pub max_requests_per_second: Option<f64>,
    pub timeout: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            max_requests_per_second: Some(5.0),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct FetchOutcome {
    pub records: Vec<ImageRecord>,
    pub failures: Vec<FetchFailure>,
    pub requests: usize,
}

#[derive(Debug, Deserialize)]
struct SearchPage {
    #[serde(default)]
    results: Vec<Photo>,
}

#[derive(Debug, Deserialize)]
struct Photo {
    id: String,
    urls: PhotoUrls,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    alt_description: Option<String>,
    #[serde(default)]
    width: Option<u64>,
    #[serde(default)]
    height: Option<u64>,
    #[serde(default)]
    user: Option<Photographer>,
    #[serde(default)]
    links: Option<PhotoLinks>,
}

#[derive(Debug, Deserialize)]
struct PhotoUrls {
    regular: String,
}

#[derive(Debug, Deserialize)]
struct Photographer {
    #[serde(default)]
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
struct PhotoLinks {
    #[serde(default)]
    html: Option<String>,
}

struct Throttle {
    min_gap: Option<Duration>,
    last: Option<Instant>,
}

impl Throttle {
    fn wait(&mut self) {
        if let (Some(gap), Some(last)) = (self.min_gap, self.last) {
            let elapsed = last.elapsed();
            if elapsed < gap {
                thread::sleep(gap - elapsed);
            }
        }
        self.last = Some(Instant::now());
    }
}

/// Searches for `query` and downloads up to `count` photos into `dest_dir`.
///
/// Search failures abort; individual download failures are collected in
/// [`FetchOutcome::failures`] and the remaining photos are still fetched.
pub fn fetch_images(
    query: &str,
    count: usize,
    api_key: &str,
    dest_dir: &Path,
    options: &FetchOptions,
) -> Result<FetchOutcome> {
    let mut outcome = FetchOutcome::default();
    if count == 0 {
        return Ok(outcome);
    }
    if api_key.trim().is_empty() {
        return Err(Error::MissingApiKey);
    }
    fs::create_dir_all(dest_dir).map_err(|e| Error::io(dest_dir, e))?;

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(options.timeout))
        .build()
        .into();
    let mut throttle = Throttle {
        min_gap: options
            .max_requests_per_second
            .filter(|r| *r > 0.0)
            .map(|r| Duration::from_secs_f64(1.0 / r)),
        last: None,
    };
    let auth = format!("Client-ID {api_key}");
    let base = options.base_url.trim_end_matches('/');

    let mut photos = Vec::new();
    let mut page = 1usize;
    while photos.len() < count {
        let per_page = (count - photos.len()).min(MAX_PER_PAGE);
        throttle.wait();
        outcome.requests += 1;
        let mut resp = agent
            .get(&format!("{base}/search/photos"))
            .header("Authorization", &auth)
            .header("Accept-Version", "v1")
            .query("query", query)
            .query("page", page.to_string())
            .query("per_page", per_page.to_string())
            .call()
            .map_err(|e| Error::Http(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(classify_status(status, &body));
        }
        let parsed: SearchPage = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Http(format!("malformed search response: {e}")))?;
        if parsed.results.is_empty() {
            break;
        }
        photos.extend(parsed.results);
        page += 1;
    }
    photos.truncate(count);

    for photo in photos {
        let local = image_path(dest_dir, &photo.id);
        throttle.wait();
        outcome.requests += 1;
        match download(&agent, &photo.urls.regular, &local) {
            Ok(()) => outcome.records.push(to_record(photo, &local)),
            Err(reason) => {
                log::warn!("download of {} failed: {reason}", photo.id);
                outcome.failures.push(FetchFailure { id: photo.id, reason });
            }
        }
    }
    Ok(outcome)
}

fn classify_status(status: u16, body: &str) -> Error {
    if status == 429 || (status == 403 && body.to_ascii_lowercase().contains("rate limit")) {
        Error::QuotaExceeded(format!("status {status}"))
    } else if status == 401 {
        Error::Http("status 401: access key rejected".into())
    } else {
        Error::Http(format!("status {status}: {}", body.trim()))
    }
}

fn download(agent: &ureq::Agent, url: &str, dest: &Path) -> std::result::Result<(), String> {
    let mut resp = agent.get(url).call().map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    if status != 200 {
        return Err(format!("status {status}"));
    }
    let bytes = resp
        .body_mut()
        .with_config()
        .limit(MAX_IMAGE_BYTES)
        .read_to_vec()
        .map_err(|e| e.to_string())?;
    fs::write(dest, bytes).map_err(|e| format!("{}: {e}", dest.display()))
}

fn to_record(photo: Photo, local: &Path) -> ImageRecord {
    let mut record = ImageRecord::new(photo.id, photo.urls.regular);
    let meta = &mut record.metadata;
    meta.insert("local_path".into(), local.display().to_string().into());
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            meta.insert(k.into(), v.into());
        }
    };
    put("description", photo.description);
    put("alt_description", photo.alt_description);
    put("photographer", photo.user.and_then(|u| u.name));
    put("page_url", photo.links.and_then(|l| l.html));
    if let (Some(w), Some(h)) = (photo.width, photo.height) {
        meta.insert("width".into(), w.into());
        meta.insert("height".into(), h.into());
    }
    record
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Picks the explicit key if given, else the environment variable.
pub fn resolve_api_key(explicit: Option<&str>) -> Option<String> {
    explicit
        .map(str::to_owned)
        .or_else(|| std::env::var(API_KEY_ENV).ok())
        .filter(|k| !k.trim().is_empty())
}

pub fn image_path(dest_dir: &Path, id: &str) -> PathBuf {
    dest_dir.join(format!("{}.jpg", sanitize(id)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_makes_no_requests() {
        let dir = tempfile::tempdir().unwrap();
        let opts = FetchOptions {
            base_url: "http://127.0.0.1:1".into(),
            ..Default::default()
        };
        let out = fetch_images("kitchen", 0, "", dir.path(), &opts).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.requests, 0);
    }

    #[test]
    fn missing_key_fails_before_requests() {
        let dir = tempfile::tempdir().unwrap();
        let opts = FetchOptions {
            base_url: "http://127.0.0.1:1".into(),
            ..Default::default()
        };
        let err = fetch_images("kitchen", 3, "  ", dir.path(), &opts).unwrap_err();
        assert!(matches!(err, Error::MissingApiKey));
        assert!(err.to_string().contains("missing key"));
    }

    #[test]
    fn status_classification() {
        assert!(matches!(
            classify_status(403, "Rate Limit Exceeded"),
            Error::QuotaExceeded(_)
        ));
        assert!(matches!(classify_status(429, ""), Error::QuotaExceeded(_)));
        assert!(matches!(classify_status(500, "boom"), Error::Http(_)));
    }

    #[test]
    fn ids_are_sanitized_for_paths() {
        assert_eq!(sanitize("ab/../c d"), "ab____c_d");
    }
}
