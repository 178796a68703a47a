#ifndef MIRAGE_AES128_H
#define MIRAGE_AES128_H

#include <stdint.h>

void mirage_aes_init(void);
void mirage_aes128_expand(const uint8_t key[16], uint8_t rk[176]);
void mirage_aes128_encrypt(const uint8_t rk[176], const uint8_t in[16], uint8_t out[16]);
void mirage_aes128_decrypt(const uint8_t rk[176], const uint8_t in[16], uint8_t out[16]);

/* Scan candidate keys partial|k, k = 0 .. 2^d - 1, ascending.  Returns the
 * first k whose decryption matches `want` under `mask`, or -1. */
int64_t mirage_search_key(const uint8_t cipher[16], const uint8_t partial[16], int d,
                          const uint8_t want[16], const uint8_t mask[16]);

#endif
