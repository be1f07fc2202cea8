//! Raw ext4 on-disk structures.
//!
//! All multi-byte fields are little-endian. Offsets follow fs/ext4/ext4.h.

use alloc::format;
use alloc::string::String;

use super::Ext4Error;

pub const SUPERBLOCK_OFFSET: usize = 1024;
pub const SUPERBLOCK_SIZE: usize = 1024;
pub const EXT4_MAGIC: u16 = 0xEF53;
pub const EXTENT_MAGIC: u16 = 0xF30A;
pub const ROOT_INO: u32 = 2;

// incompat feature flags
pub const INCOMPAT_FILETYPE: u32 = 0x0002;
pub const INCOMPAT_EXTENTS: u32 = 0x0040;
pub const INCOMPAT_64BIT: u32 = 0x0080;
pub const INCOMPAT_FLEX_BG: u32 = 0x0200;

/// The incompat features this reader understands. Anything else fails
/// `open_image` by name.
pub const INCOMPAT_SUPPORTED: u32 =
    INCOMPAT_FILETYPE | INCOMPAT_EXTENTS | INCOMPAT_64BIT | INCOMPAT_FLEX_BG;

// inode flags
pub const EXTENTS_FL: u32 = 0x0008_0000;
pub const INLINE_DATA_FL: u32 = 0x1000_0000;

// an extent with ee_len above this is unwritten; actual length is the rest
const EXTENT_UNWRITTEN_BIAS: u16 = 32768;

pub(super) fn le_u16(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

pub(super) fn le_u32(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Parsed superblock; only the fields block resolution needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Superblock {
    pub block_size: u32,
    pub blocks_count: u64,
    pub inodes_count: u32,
    pub blocks_per_group: u32,
    pub inodes_per_group: u32,
    pub inode_size: u16,
    pub first_data_block: u32,
    pub feature_incompat: u32,
    pub volume_uuid: [u8; 16],
    pub magic: u16,
    pub desc_size: u16,
}

impl Superblock {
    /// Parses the 1024-byte superblock region (image bytes 1024..2048).
    pub fn parse(region: &[u8]) -> Result<Self, Ext4Error> {
        if region.len() < SUPERBLOCK_SIZE {
            return Err(Ext4Error::Truncated);
        }
        let magic = le_u16(region, 0x38);
        if magic != EXT4_MAGIC {
            return Err(Ext4Error::NotExt4);
        }

        let log_block_size = le_u32(region, 0x18);
        if log_block_size > 6 {
            return Err(Ext4Error::InvalidSuperblock("block size too large"));
        }
        let block_size = 1024u32 << log_block_size;

        let feature_incompat = le_u32(region, 0x60);
        let unsupported = feature_incompat & !INCOMPAT_SUPPORTED;
        if unsupported != 0 {
            return Err(Ext4Error::UnsupportedFeature(incompat_flag_name(
                unsupported,
            )));
        }

        let is_64bit = feature_incompat & INCOMPAT_64BIT != 0;
        let blocks_lo = le_u32(region, 0x04) as u64;
        let blocks_hi = if is_64bit {
            le_u32(region, 0x150) as u64
        } else {
            0
        };
        let blocks_count = blocks_lo | (blocks_hi << 32);

        let rev_level = le_u32(region, 0x4C);
        let inode_size = if rev_level == 0 {
            128
        } else {
            le_u16(region, 0x58)
        };

        let raw_desc_size = le_u16(region, 0xFE);
        let desc_size = if is_64bit { raw_desc_size.max(32) } else { 32 };

        let mut uuid = [0u8; 16];
        uuid.copy_from_slice(&region[0x68..0x78]);

        let sb = Self {
            block_size,
            blocks_count,
            inodes_count: le_u32(region, 0x00),
            blocks_per_group: le_u32(region, 0x20),
            inodes_per_group: le_u32(region, 0x28),
            inode_size,
            first_data_block: le_u32(region, 0x14),
            feature_incompat,
            volume_uuid: uuid,
            magic,
            desc_size,
        };
        sb.check_geometry()?;
        Ok(sb)
    }

    fn check_geometry(&self) -> Result<(), Ext4Error> {
        if self.blocks_per_group == 0 {
            return Err(Ext4Error::InvalidSuperblock("blocks_per_group is zero"));
        }
        if self.blocks_per_group as u64 > 8 * self.block_size as u64 {
            return Err(Ext4Error::InvalidSuperblock(
                "blocks_per_group exceeds bitmap capacity",
            ));
        }
        if self.inodes_per_group == 0 {
            return Err(Ext4Error::InvalidSuperblock("inodes_per_group is zero"));
        }
        if self.inode_size < 128 || !self.inode_size.is_power_of_two() {
            return Err(Ext4Error::InvalidSuperblock("bad inode size"));
        }
        if self.blocks_count == 0 || self.first_data_block as u64 >= self.blocks_count {
            return Err(Ext4Error::InvalidSuperblock(
                "first data block beyond block count",
            ));
        }
        Ok(())
    }

    pub fn group_count(&self) -> u64 {
        (self.blocks_count - self.first_data_block as u64).div_ceil(self.blocks_per_group as u64)
    }

    /// Byte offset of the group descriptor table.
    pub fn gdt_offset(&self) -> u64 {
        (self.first_data_block as u64 + 1) * self.block_size as u64
    }
}

fn incompat_flag_name(bits: u32) -> String {
    let first = bits.trailing_zeros();
    match 1u32 << first {
        0x0001 => String::from("compression"),
        0x0004 => String::from("recover"),
        0x0008 => String::from("journal_dev"),
        0x0010 => String::from("meta_bg"),
        0x0100 => String::from("mmp"),
        0x0400 => String::from("ea_inode"),
        0x1000 => String::from("dirdata"),
        0x2000 => String::from("csum_seed"),
        0x4000 => String::from("largedir"),
        0x8000 => String::from("inline_data"),
        0x10000 => String::from("encrypt"),
        0x20000 => String::from("casefold"),
        other => format!("incompat bit {other:#x}"),
    }
}

/// Block-group metadata locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupDescriptor {
    pub block_bitmap_loc: u64,
    pub inode_bitmap_loc: u64,
    pub inode_table_loc: u64,
    pub free_blocks: u32,
    pub free_inodes: u32,
}

impl GroupDescriptor {
    /// Parses one descriptor; `desc` must be `desc_size` bytes.
    pub fn parse(desc: &[u8], desc_size: u16) -> Self {
        let mut block_bitmap = le_u32(desc, 0x00) as u64;
        let mut inode_bitmap = le_u32(desc, 0x04) as u64;
        let mut inode_table = le_u32(desc, 0x08) as u64;
        let mut free_blocks = le_u16(desc, 0x0C) as u32;
        let mut free_inodes = le_u16(desc, 0x0E) as u32;
        if desc_size >= 64 {
            block_bitmap |= (le_u32(desc, 0x20) as u64) << 32;
            inode_bitmap |= (le_u32(desc, 0x24) as u64) << 32;
            inode_table |= (le_u32(desc, 0x28) as u64) << 32;
            free_blocks |= (le_u16(desc, 0x2C) as u32) << 16;
            free_inodes |= (le_u16(desc, 0x2E) as u32) << 16;
        }
        Self {
            block_bitmap_loc: block_bitmap,
            inode_bitmap_loc: inode_bitmap,
            inode_table_loc: inode_table,
            free_blocks,
            free_inodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileType {
    Regular,
    Directory,
    Symlink,
    Other,
}

/// Decoded inode; `block_map_raw` is the 60-byte i_block area, interpreted
/// by the extent walker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InodeRecord {
    pub ino: u32,
    pub file_type: FileType,
    pub size: u64,
    pub uses_extents: bool,
    pub block_map_raw: [u8; 60],
    pub flags: u32,
}

impl InodeRecord {
    /// Parses an inode from its on-disk bytes (at least 128).
    pub fn parse(ino: u32, raw: &[u8]) -> Result<Self, Ext4Error> {
        if raw.len() < 128 {
            return Err(Ext4Error::Truncated);
        }
        let mode = le_u16(raw, 0x00);
        let file_type = match mode & 0xF000 {
            0x8000 => FileType::Regular,
            0x4000 => FileType::Directory,
            0xA000 => FileType::Symlink,
            _ => FileType::Other,
        };
        let size_lo = le_u32(raw, 0x04) as u64;
        // i_size_high doubles as the obsolete dir ACL field; only regular
        // files carry a 64-bit size
        let size = if file_type == FileType::Regular {
            size_lo | ((le_u32(raw, 0x6C) as u64) << 32)
        } else {
            size_lo
        };
        let flags = le_u32(raw, 0x20);
        let mut block_map_raw = [0u8; 60];
        block_map_raw.copy_from_slice(&raw[0x28..0x64]);
        Ok(Self {
            ino,
            file_type,
            size,
            uses_extents: flags & EXTENTS_FL != 0,
            block_map_raw,
            flags,
        })
    }

    pub fn has_inline_data(&self) -> bool {
        self.flags & INLINE_DATA_FL != 0
    }
}

/// One leaf extent: `length` contiguous physical blocks mapped at logical
/// block `logical_start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extent {
    pub logical_start: u32,
    pub physical_start: u64,
    pub length: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct ExtentHeader {
    pub entries: u16,
    pub max_entries: u16,
    pub depth: u16,
}

impl ExtentHeader {
    /// Parses and sanity-checks an extent node header.
    pub fn parse(node: &[u8]) -> Result<Self, Ext4Error> {
        if node.len() < 12 {
            return Err(Ext4Error::CorruptExtentTree("node too small"));
        }
        if le_u16(node, 0x00) != EXTENT_MAGIC {
            return Err(Ext4Error::CorruptExtentTree("bad node magic"));
        }
        let header = Self {
            entries: le_u16(node, 0x02),
            max_entries: le_u16(node, 0x04),
            depth: le_u16(node, 0x06),
        };
        let capacity = (node.len() - 12) / 12;
        if header.entries as usize > capacity || header.entries > header.max_entries {
            return Err(Ext4Error::CorruptExtentTree("entry count beyond capacity"));
        }
        if header.depth > 5 {
            return Err(Ext4Error::CorruptExtentTree("tree too deep"));
        }
        Ok(header)
    }
}

/// Leaf entry at index `i` of a depth-0 node.
pub fn parse_extent(node: &[u8], i: usize) -> Result<Extent, Ext4Error> {
    let off = 12 + i * 12;
    let raw_len = le_u16(node, off + 4);
    let length = if raw_len == 0 {
        return Err(Ext4Error::CorruptExtentTree("zero-length extent"));
    } else if raw_len > EXTENT_UNWRITTEN_BIAS {
        // unwritten (preallocated) extent: blocks are allocated on disk
        (raw_len - EXTENT_UNWRITTEN_BIAS) as u32
    } else {
        raw_len as u32
    };
    if length == 0 {
        return Err(Ext4Error::CorruptExtentTree("zero-length extent"));
    }
    let physical = le_u32(node, off + 8) as u64 | ((le_u16(node, off + 6) as u64) << 32);
    Ok(Extent {
        logical_start: le_u32(node, off),
        physical_start: physical,
        length,
    })
}

/// Child block number of index entry `i` of an interior node.
pub fn parse_extent_index(node: &[u8], i: usize) -> u64 {
    let off = 12 + i * 12;
    le_u32(node, off + 4) as u64 | ((le_u16(node, off + 8) as u64) << 32)
}

/// One directory entry: `(inode, name, entry length)`.
pub struct DirEntry<'a> {
    pub ino: u32,
    pub name: &'a [u8],
    pub rec_len: usize,
}

/// Parses the directory entry at `off` within a directory block.
pub fn parse_dirent(block: &[u8], off: usize) -> Result<DirEntry<'_>, Ext4Error> {
    if off + 8 > block.len() {
        return Err(Ext4Error::CorruptDirectory("entry header beyond block"));
    }
    let ino = le_u32(block, off);
    let rec_len = le_u16(block, off + 4) as usize;
    let name_len = block[off + 6] as usize;
    if rec_len < 8 || off + rec_len > block.len() {
        return Err(Ext4Error::CorruptDirectory("bad record length"));
    }
    if 8 + name_len > rec_len {
        return Err(Ext4Error::CorruptDirectory("name overruns record"));
    }
    Ok(DirEntry {
        ino,
        name: &block[off + 8..off + 8 + name_len],
        rec_len,
    })
}
