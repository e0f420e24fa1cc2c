pub mod formats;
pub mod verify;
