//! Content-addressed directory: one file per blob at `<root>/<hex-digest>`.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use fedpp_core::blobstore::{Blob, BlobError, ContentPointer, ContentStore};

#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    /// Opens `root`, creating it if needed.
    pub fn create(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    /// Opens an existing directory read-only in practice; missing blobs read as absent.
    pub fn open(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_of(&self, p: &ContentPointer) -> PathBuf {
        self.root.join(p.to_hex())
    }
}

impl ContentStore for DirStore {
    fn put(&mut self, blob: Blob) -> Result<ContentPointer, BlobError> {
        let p = blob.pointer();
        let path = self.path_of(&p);
        if !path.exists() {
            let tmp = self.root.join(format!(".{}.tmp", p.to_hex()));
            fs::write(&tmp, blob.as_bytes())
                .and_then(|_| fs::rename(&tmp, &path))
                .map_err(|e| BlobError::Backend(e.to_string()))?;
        }
        Ok(p)
    }

    /// Bytes whose digest differs from the file name read as absent.
    fn get(&self, pointer: &ContentPointer) -> Result<Blob, BlobError> {
        match fs::read(self.path_of(pointer)) {
            Ok(bytes) => {
                let blob = Blob::new(bytes)?;
                if blob.pointer() != *pointer {
                    return Err(BlobError::NotFound(*pointer));
                }
                Ok(blob)
            }
            Err(e) if e.kind() == ErrorKind::NotFound => Err(BlobError::NotFound(*pointer)),
            Err(e) => Err(BlobError::Backend(e.to_string())),
        }
    }
}
