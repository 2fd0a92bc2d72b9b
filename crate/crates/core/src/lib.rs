// SPDX-License-Identifier: Apache-2.0
#![cfg_attr(not(feature = "std"), no_std)]
extern crate alloc;

pub mod bigint;
pub mod codec;
pub mod paillier;
pub mod pairing;
pub mod protocol;
pub mod reputation;
pub mod token;
