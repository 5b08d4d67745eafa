#pragma once

#include "cryptvault/bench.hpp"
#include "cryptvault/bytes.hpp"
#include "cryptvault/cipher.hpp"
#include "cryptvault/digest.hpp"
#include "cryptvault/errors.hpp"
#include "cryptvault/fs.hpp"
#include "cryptvault/keystore.hpp"
#include "cryptvault/stats.hpp"
#include "cryptvault/vault.hpp"
