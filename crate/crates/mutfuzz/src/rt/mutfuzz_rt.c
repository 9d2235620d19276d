#include "mutfuzz_rt.h"

#include <fcntl.h>
#include <signal.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/mman.h>
#include <unistd.h>

static unsigned char *data;
static unsigned long data_len;
static unsigned long position;
static uint64_t content_hash;

static uint64_t fnv1a(const unsigned char *p, unsigned long n) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned long i = 0; i < n; i++) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

/* Extension bytes depend only on the content hash and the position, so
 * rereading after a seek yields the same bytes. */
static unsigned char extension_byte(unsigned long pos) {
    uint64_t z = content_hash + 0x9e3779b97f4a7c15ULL * (uint64_t)(pos / 8 + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return (unsigned char)(z >> (8 * (pos % 8)));
}

void load_buffer(const unsigned char *bytes, unsigned long n) {
    free(data);
    data = malloc(n ? n : 1);
    if (!data)
        exit(MUTFUZZ_EXIT_UNREADABLE);
    if (n)
        memcpy(data, bytes, n);
    data_len = n;
    position = 0;
    content_hash = fnv1a(data, n);
}

void load_file(const char *path) {
    FILE *f = path ? fopen(path, "rb") : NULL;
    if (!f) {
        fprintf(stderr, "cannot read input file %s\n", path ? path : "(none)");
        exit(MUTFUZZ_EXIT_UNREADABLE);
    }
    unsigned char *buf = NULL;
    unsigned long len = 0, cap = 0;
    for (;;) {
        if (len == cap) {
            cap = cap ? cap * 2 : 4096;
            buf = realloc(buf, cap);
            if (!buf)
                exit(MUTFUZZ_EXIT_UNREADABLE);
        }
        size_t got = fread(buf + len, 1, cap - len, f);
        if (got == 0)
            break;
        len += got;
    }
    fclose(f);
    load_buffer(buf, len);
    free(buf);
}

void get_value(void *dest, unsigned long n, int flags) {
    (void)flags;
    unsigned char *out = dest;
    for (unsigned long i = 0; i < n; i++, position++)
        out[i] = position < data_len ? data[position] : extension_byte(position);
}

void seek_data_index(unsigned long offset) {
    position = offset;
}

int compare_value(const void *a, const void *b, unsigned long n) {
    const unsigned char *x = a, *y = b;
    for (unsigned long i = 0; i < n; i++) {
        if (x[i] != y[i]) {
            if (getenv("MUTFUZZ_VERBOSE"))
                fprintf(stderr, "first difference at offset %lu\n", i);
            return 1;
        }
    }
    return 0;
}

void log_checkpoint(const char *msg) {
    fputs(msg, stdout);
    fputc('\n', stdout);
    fflush(stdout);
}

void safe_abort(void) {
    fflush(NULL);
    abort();
}

void print_bytes(const char *label, const void *p, unsigned long n) {
    const unsigned char *b = p;
    printf("%s =", label);
    for (unsigned long i = 0; i < n; i++)
        printf(" %02x", b[i]);
    printf("\n");
    fflush(stdout);
}

void dump_hex(const char *label, const void *p, unsigned long n, int tag) {
    const unsigned char *b = p;
    printf("OUT %s ", label);
    if (n == 0)
        printf("%02x", tag & 0xff);
    for (unsigned long i = 0; i < n; i++)
        printf("%02x", b[i]);
    printf("\n");
    fflush(stdout);
}

void check_equal(const char *label, const void *a, const void *b, unsigned long n) {
    if (memcmp(a, b, n) != 0) {
        printf("ASSERTION FAILED: %s\n", label);
        fflush(stdout);
        abort();
    }
}

void check_true(const char *label, int cond) {
    if (!cond) {
        printf("ASSERTION FAILED: %s\n", label);
        fflush(stdout);
        abort();
    }
}

/* Coverage. Edge ids combine the previous and the current block id. */

static unsigned char dummy_map[MUTFUZZ_MAP_SIZE];
static unsigned char *coverage = dummy_map;
static uint32_t prev_block;
static uint32_t next_guard_id = 1;

static void attach_map(void) {
    static int attached;
    if (attached)
        return;
    attached = 1;
    const char *path = getenv(MUTFUZZ_MAP_ENV);
    if (!path || !*path)
        return;
    int fd = open(path, O_RDWR);
    if (fd < 0)
        return;
    void *m = mmap(NULL, MUTFUZZ_MAP_SIZE, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
    close(fd);
    if (m != MAP_FAILED)
        coverage = m;
}

static void record(uint32_t cur) {
    uint32_t edge = ((prev_block >> 1) ^ cur) & (MUTFUZZ_MAP_SIZE - 1);
    if (coverage[edge] != 0xff)
        coverage[edge]++;
    prev_block = cur;
}

void __sanitizer_cov_trace_pc_guard_init(uint32_t *start, uint32_t *stop) {
    attach_map();
    if (start == stop || *start)
        return;
    for (uint32_t *g = start; g < stop; g++) {
        /* Spread ids over the map; 0 means "not instrumented". */
        uint32_t id = (next_guard_id++ * 2654435761u) & (MUTFUZZ_MAP_SIZE - 1);
        *g = id ? id : 1;
    }
}

void __sanitizer_cov_trace_pc_guard(uint32_t *guard) {
    if (*guard)
        record(*guard);
}

/* gcc offers only -fsanitize-coverage=trace-pc; block ids come from the
 * return address. */
void __sanitizer_cov_trace_pc(void) {
    attach_map();
    uintptr_t pc = (uintptr_t)__builtin_return_address(0);
    record((uint32_t)((pc >> 4) ^ (pc << 8)) & (MUTFUZZ_MAP_SIZE - 1));
}
