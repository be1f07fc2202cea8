//! Read-only ext4 image parsing and genome extraction.
//!
//! [`open_image`] parses the superblock and group descriptors of a raw
//! ext4 image (the image starts at the filesystem's byte 0; no partition
//! tables). [`Ext4Image::walk_tree`] traverses the directory tree from the
//! root inode and resolves every regular file's physical blocks through
//! its extent tree; [`Ext4Image::extract_fsg`] turns that into a genome.
//!
//! Only extent-mapped inodes are supported; legacy ext2/ext3 indirect
//! block maps raise a typed error. Metadata checksums are read past, never
//! verified. Directories, symlinks, and special files contribute no genome
//! entries ([`GENOME_INCLUDES_DIRECTORIES`]).

mod ondisk;

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::genome::{BlockList, Fsg, GenomeError};

pub use ondisk::{
    Extent, FileType, GroupDescriptor, InodeRecord, Superblock, EXT4_MAGIC, EXTENT_MAGIC,
    INCOMPAT_64BIT, INCOMPAT_EXTENTS, INCOMPAT_FILETYPE, INCOMPAT_FLEX_BG, INCOMPAT_SUPPORTED,
    ROOT_INO, SUPERBLOCK_OFFSET, SUPERBLOCK_SIZE,
};

/// Whether a directory's own data blocks belong to the genome. They do
/// not: only regular files are rows, directory layout is metadata.
pub const GENOME_INCLUDES_DIRECTORIES: bool = false;

#[derive(Debug, Error, PartialEq)]
pub enum Ext4Error {
    #[error("image truncated")]
    Truncated,
    #[error("not an ext4 image")]
    NotExt4,
    #[error("invalid superblock: {0}")]
    InvalidSuperblock(&'static str),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("corrupt group descriptor {0}")]
    CorruptGroupDescriptor(u64),
    #[error("inode out of range: {0}")]
    InodeOutOfRange(u64),
    #[error("inode {0} is not a regular file")]
    NotRegularFile(u32),
    #[error("corrupt extent tree: {0}")]
    CorruptExtentTree(&'static str),
    #[error("unsupported legacy block map")]
    LegacyBlockMap,
    #[error("corrupt directory: {0}")]
    CorruptDirectory(&'static str),
    #[error("directory cycle at inode {0}")]
    DirectoryCycle(u32),
    #[error("{path}: {source}")]
    AtPath {
        path: String,
        source: Box<Ext4Error>,
    },
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

impl Ext4Error {
    fn at(self, path: &str) -> Self {
        Ext4Error::AtPath {
            path: path.to_owned(),
            source: Box::new(self),
        }
    }
}

/// One regular file of the tree: absolute path, inode, resolved blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileRecord {
    pub path: String,
    pub ino: u32,
    pub blocks: Vec<u64>,
    /// First path component, for directory-colored reports.
    pub top_dir: String,
}

/// Immutable parsed view of an ext4 image. Safe to share between threads;
/// nothing here mutates the underlying bytes.
#[derive(Debug)]
pub struct Ext4Image<'a> {
    bytes: &'a [u8],
    superblock: Superblock,
    groups: Vec<GroupDescriptor>,
}

/// Parses superblock and group descriptors; the image is read-only
/// thereafter.
pub fn open_image(bytes: &[u8]) -> Result<Ext4Image<'_>, Ext4Error> {
    if bytes.len() < ondisk::SUPERBLOCK_OFFSET + ondisk::SUPERBLOCK_SIZE {
        return Err(Ext4Error::Truncated);
    }
    let superblock = Superblock::parse(
        &bytes[ondisk::SUPERBLOCK_OFFSET..ondisk::SUPERBLOCK_OFFSET + ondisk::SUPERBLOCK_SIZE],
    )?;

    let group_count = superblock.group_count();
    let desc_size = superblock.desc_size as u64;
    let gdt_start = superblock.gdt_offset();
    let gdt_end = gdt_start + group_count * desc_size;
    if gdt_end > bytes.len() as u64 {
        return Err(Ext4Error::Truncated);
    }
    let mut groups = Vec::with_capacity(group_count as usize);
    for g in 0..group_count {
        let off = (gdt_start + g * desc_size) as usize;
        let desc =
            GroupDescriptor::parse(&bytes[off..off + desc_size as usize], superblock.desc_size);
        if desc.block_bitmap_loc >= superblock.blocks_count
            || desc.inode_bitmap_loc >= superblock.blocks_count
            || desc.inode_table_loc >= superblock.blocks_count
        {
            return Err(Ext4Error::CorruptGroupDescriptor(g));
        }
        groups.push(desc);
    }

    Ok(Ext4Image {
        bytes,
        superblock,
        groups,
    })
}

impl<'a> Ext4Image<'a> {
    pub fn superblock(&self) -> &Superblock {
        &self.superblock
    }

    pub fn group_descriptors(&self) -> &[GroupDescriptor] {
        &self.groups
    }

    fn block(&self, n: u64) -> Result<&'a [u8], Ext4Error> {
        let bs = self.superblock.block_size as u64;
        let start = n * bs;
        let end = start + bs;
        if n >= self.superblock.blocks_count || end > self.bytes.len() as u64 {
            return Err(Ext4Error::Truncated);
        }
        Ok(&self.bytes[start as usize..end as usize])
    }

    /// Decodes inode `ino` (1-based) from its group's inode table.
    pub fn read_inode(&self, ino: u32) -> Result<InodeRecord, Ext4Error> {
        if ino == 0 || ino > self.superblock.inodes_count {
            return Err(Ext4Error::InodeOutOfRange(ino as u64));
        }
        let index = (ino - 1) as u64;
        let group = (index / self.superblock.inodes_per_group as u64) as usize;
        let slot = index % self.superblock.inodes_per_group as u64;
        let Some(desc) = self.groups.get(group) else {
            return Err(Ext4Error::InodeOutOfRange(ino as u64));
        };
        let inode_size = self.superblock.inode_size as u64;
        let offset = desc.inode_table_loc * self.superblock.block_size as u64 + slot * inode_size;
        let end = offset + inode_size;
        if end > self.bytes.len() as u64 {
            return Err(Ext4Error::Truncated);
        }
        InodeRecord::parse(ino, &self.bytes[offset as usize..end as usize])
    }

    /// Physical block numbers of a regular file, in logical-block order.
    ///
    /// Holes contribute nothing; inline-data files resolve to no blocks.
    pub fn resolve_blocks(&self, inode: &InodeRecord) -> Result<Vec<u64>, Ext4Error> {
        if inode.file_type != FileType::Regular {
            return Err(Ext4Error::NotRegularFile(inode.ino));
        }
        self.resolve_blocks_any(inode)
    }

    /// Block resolution shared by files and directories.
    fn resolve_blocks_any(&self, inode: &InodeRecord) -> Result<Vec<u64>, Ext4Error> {
        if inode.has_inline_data() {
            return Ok(Vec::new());
        }
        if !inode.uses_extents {
            if inode.size == 0 && inode.block_map_raw.iter().all(|&b| b == 0) {
                return Ok(Vec::new());
            }
            return Err(Ext4Error::LegacyBlockMap);
        }
        let mut extents = Vec::new();
        self.collect_extents(&inode.block_map_raw, None, &mut extents)?;
        extents.sort_by_key(|e| e.logical_start);
        for pair in extents.windows(2) {
            if pair[0].logical_start as u64 + pair[0].length as u64 > pair[1].logical_start as u64 {
                return Err(Ext4Error::CorruptExtentTree("overlapping extents"));
            }
        }
        let mut blocks = Vec::new();
        for e in &extents {
            blocks.extend(e.physical_start..e.physical_start + e.length as u64);
        }
        Ok(blocks)
    }

    /// Walks one extent node, recursing through interior index nodes down
    /// to the depth-0 leaves.
    fn collect_extents(
        &self,
        node: &[u8],
        expected_depth: Option<u16>,
        out: &mut Vec<Extent>,
    ) -> Result<(), Ext4Error> {
        let header = ondisk::ExtentHeader::parse(node)?;
        if let Some(depth) = expected_depth {
            if header.depth != depth {
                return Err(Ext4Error::CorruptExtentTree("depth mismatch"));
            }
        }
        if header.depth == 0 {
            for i in 0..header.entries as usize {
                let extent = ondisk::parse_extent(node, i)?;
                if extent.physical_start + extent.length as u64 > self.superblock.blocks_count {
                    return Err(Ext4Error::CorruptExtentTree("extent beyond block count"));
                }
                out.push(extent);
            }
        } else {
            for i in 0..header.entries as usize {
                let child = ondisk::parse_extent_index(node, i);
                if child >= self.superblock.blocks_count {
                    return Err(Ext4Error::CorruptExtentTree("index beyond block count"));
                }
                self.collect_extents(self.block(child)?, Some(header.depth - 1), out)?;
            }
        }
        Ok(())
    }

    /// Depth-first traversal from the root, yielding regular files only.
    ///
    /// Entries are visited in lexicographic name order at each level, so
    /// the sequence is independent of on-disk directory layout.
    pub fn walk_tree(&self) -> Result<Vec<FileRecord>, Ext4Error> {
        let root = self.read_inode(ondisk::ROOT_INO)?;
        if root.file_type != FileType::Directory {
            return Err(Ext4Error::CorruptDirectory("root inode is not a directory"));
        }
        let mut records = Vec::new();
        let mut on_path = BTreeSet::new();
        self.walk_dir(&root, "", &mut on_path, &mut records)?;
        Ok(records)
    }

    fn walk_dir(
        &self,
        dir: &InodeRecord,
        dir_path: &str,
        on_path: &mut BTreeSet<u32>,
        records: &mut Vec<FileRecord>,
    ) -> Result<(), Ext4Error> {
        let display_path = if dir_path.is_empty() { "/" } else { dir_path };
        if !on_path.insert(dir.ino) {
            return Err(Ext4Error::DirectoryCycle(dir.ino).at(display_path));
        }

        let mut entries: Vec<(String, u32)> = Vec::new();
        let dir_blocks = self
            .resolve_blocks_any(dir)
            .map_err(|e| e.at(display_path))?;
        for block_no in dir_blocks {
            let block = self.block(block_no).map_err(|e| e.at(display_path))?;
            let mut off = 0;
            while off < block.len() {
                let entry = ondisk::parse_dirent(block, off).map_err(|e| e.at(display_path))?;
                let rec_len = entry.rec_len;
                if entry.ino != 0 && entry.name != b"." && entry.name != b".." {
                    if entry.ino > self.superblock.inodes_count {
                        return Err(Ext4Error::CorruptDirectory("entry inode out of range")
                            .at(display_path));
                    }
                    let name = String::from_utf8_lossy(entry.name).into_owned();
                    entries.push((name, entry.ino));
                }
                off += rec_len;
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Ext4Error::CorruptDirectory("duplicate entry name").at(display_path));
            }
        }

        for (name, ino) in entries {
            let child_path = alloc::format!("{dir_path}/{name}");
            let inode = self.read_inode(ino).map_err(|e| e.at(&child_path))?;
            match inode.file_type {
                FileType::Directory => {
                    self.walk_dir(&inode, &child_path, on_path, records)?;
                }
                FileType::Regular => {
                    let blocks = self
                        .resolve_blocks_any(&inode)
                        .map_err(|e| e.at(&child_path))?;
                    let top_dir = child_path
                        .trim_start_matches('/')
                        .split('/')
                        .next()
                        .unwrap_or("")
                        .to_owned();
                    records.push(FileRecord {
                        path: child_path,
                        ino,
                        blocks,
                        top_dir,
                    });
                }
                FileType::Symlink | FileType::Other => {}
            }
        }

        on_path.remove(&dir.ino);
        Ok(())
    }

    /// Extracts the genome: one entry per regular file, carrying the
    /// volume UUID and block size. With `first_block_only` every list is
    /// truncated to its first element.
    pub fn extract_fsg(&self, first_block_only: bool) -> Result<Fsg, Ext4Error> {
        let mut fsg = Fsg::new(
            String::new(),
            Some(self.superblock.volume_uuid),
            self.superblock.block_size,
        )?;
        for record in self.walk_tree()? {
            let mut blocks = record.blocks;
            if first_block_only {
                blocks.truncate(1);
            }
            let list = BlockList::new(blocks).map_err(|e| Ext4Error::from(e).at(&record.path))?;
            fsg.insert(record.path.clone(), list)
                .map_err(|e| Ext4Error::from(e).at(&record.path))?;
        }
        Ok(fsg)
    }
}
