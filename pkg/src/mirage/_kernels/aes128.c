/* Byte-oriented AES-128.  Only used for the brute-force key search, where
 * the key changes on every candidate and a fresh schedule is unavoidable. */
#include <string.h>

#include "aes128.h"

static uint8_t sbox[256];
static uint8_t inv_sbox[256];
static uint8_t mul2[256], mul3[256], mul9[256], mul11[256], mul13[256], mul14[256];
static int ready = 0;

static uint8_t gmul(uint8_t a, uint8_t b)
{
    uint8_t p = 0;
    while (b) {
        if (b & 1)
            p ^= a;
        a = (uint8_t)((a << 1) ^ ((a & 0x80) ? 0x1b : 0));
        b >>= 1;
    }
    return p;
}

static uint8_t rotl8(uint8_t x, int s)
{
    return (uint8_t)((x << s) | (x >> (8 - s)));
}

void mirage_aes_init(void)
{
    if (ready)
        return;
    for (int x = 0; x < 256; x++) {
        /* multiplicative inverse as x^254 */
        uint8_t inv = 1, base = (uint8_t)x;
        int e = 254;
        while (e) {
            if (e & 1)
                inv = gmul(inv, base);
            base = gmul(base, base);
            e >>= 1;
        }
        if (x == 0)
            inv = 0;
        uint8_t s = inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^ rotl8(inv, 3) ^ rotl8(inv, 4) ^ 0x63;
        sbox[x] = s;
        inv_sbox[s] = (uint8_t)x;
    }
    for (int x = 0; x < 256; x++) {
        mul2[x] = gmul((uint8_t)x, 2);
        mul3[x] = gmul((uint8_t)x, 3);
        mul9[x] = gmul((uint8_t)x, 9);
        mul11[x] = gmul((uint8_t)x, 11);
        mul13[x] = gmul((uint8_t)x, 13);
        mul14[x] = gmul((uint8_t)x, 14);
    }
    ready = 1;
}

void mirage_aes128_expand(const uint8_t key[16], uint8_t rk[176])
{
    uint8_t rcon = 1;
    memcpy(rk, key, 16);
    for (int i = 16; i < 176; i += 4) {
        uint8_t t0 = rk[i - 4], t1 = rk[i - 3], t2 = rk[i - 2], t3 = rk[i - 1];
        if (i % 16 == 0) {
            uint8_t tmp = t0;
            t0 = sbox[t1] ^ rcon;
            t1 = sbox[t2];
            t2 = sbox[t3];
            t3 = sbox[tmp];
            rcon = mul2[rcon];
        }
        rk[i] = rk[i - 16] ^ t0;
        rk[i + 1] = rk[i - 15] ^ t1;
        rk[i + 2] = rk[i - 14] ^ t2;
        rk[i + 3] = rk[i - 13] ^ t3;
    }
}

static void add_round_key(uint8_t st[16], const uint8_t *k)
{
    for (int i = 0; i < 16; i++)
        st[i] ^= k[i];
}

void mirage_aes128_encrypt(const uint8_t rk[176], const uint8_t in[16], uint8_t out[16])
{
    uint8_t st[16], t[16];
    memcpy(st, in, 16);
    add_round_key(st, rk);
    for (int round = 1; round <= 10; round++) {
        /* SubBytes + ShiftRows: row r rotates left by r */
        for (int c = 0; c < 4; c++)
            for (int r = 0; r < 4; r++)
                t[4 * c + r] = sbox[st[4 * ((c + r) & 3) + r]];
        if (round < 10) {
            for (int c = 0; c < 4; c++) {
                uint8_t a0 = t[4 * c], a1 = t[4 * c + 1], a2 = t[4 * c + 2], a3 = t[4 * c + 3];
                st[4 * c] = mul2[a0] ^ mul3[a1] ^ a2 ^ a3;
                st[4 * c + 1] = a0 ^ mul2[a1] ^ mul3[a2] ^ a3;
                st[4 * c + 2] = a0 ^ a1 ^ mul2[a2] ^ mul3[a3];
                st[4 * c + 3] = mul3[a0] ^ a1 ^ a2 ^ mul2[a3];
            }
        } else {
            memcpy(st, t, 16);
        }
        add_round_key(st, rk + 16 * round);
    }
    memcpy(out, st, 16);
}

void mirage_aes128_decrypt(const uint8_t rk[176], const uint8_t in[16], uint8_t out[16])
{
    uint8_t st[16], t[16];
    memcpy(st, in, 16);
    add_round_key(st, rk + 160);
    for (int round = 9; round >= 0; round--) {
        /* InvShiftRows + InvSubBytes: row r rotates right by r */
        for (int c = 0; c < 4; c++)
            for (int r = 0; r < 4; r++)
                t[4 * c + r] = inv_sbox[st[4 * ((c - r + 4) & 3) + r]];
        add_round_key(t, rk + 16 * round);
        if (round > 0) {
            for (int c = 0; c < 4; c++) {
                uint8_t a0 = t[4 * c], a1 = t[4 * c + 1], a2 = t[4 * c + 2], a3 = t[4 * c + 3];
                st[4 * c] = mul14[a0] ^ mul11[a1] ^ mul13[a2] ^ mul9[a3];
                st[4 * c + 1] = mul9[a0] ^ mul14[a1] ^ mul11[a2] ^ mul13[a3];
                st[4 * c + 2] = mul13[a0] ^ mul9[a1] ^ mul14[a2] ^ mul11[a3];
                st[4 * c + 3] = mul11[a0] ^ mul13[a1] ^ mul9[a2] ^ mul14[a3];
            }
        } else {
            memcpy(st, t, 16);
        }
    }
    memcpy(out, st, 16);
}

int64_t mirage_search_key(const uint8_t cipher[16], const uint8_t partial[16], int d,
                          const uint8_t want[16], const uint8_t mask[16])
{
    uint8_t key[16], rk[176], pt[16];
    uint64_t n = (uint64_t)1 << d;
    mirage_aes_init();
    memcpy(key, partial, 16);
    for (uint64_t k = 0; k < n; k++) {
        /* low d bits of the big-endian key carry the candidate */
        uint64_t v = k;
        for (int b = 15; b >= 8; b--) {
            key[b] = (uint8_t)(partial[b] | (v & 0xff));
            v >>= 8;
        }
        mirage_aes128_expand(key, rk);
        mirage_aes128_decrypt(rk, cipher, pt);
        int ok = 1;
        for (int i = 0; i < 16; i++) {
            if ((pt[i] & mask[i]) != want[i]) {
                ok = 0;
                break;
            }
        }
        if (ok)
            return (int64_t)k;
    }
    return -1;
}
