/* Support runtime linked into every generated driver. */
#ifndef MUTFUZZ_RT_H
#define MUTFUZZ_RT_H

#define MUTFUZZ_MAP_SIZE 65536
#define MUTFUZZ_MAP_ENV "MUTFUZZ_COVERAGE_MAP"
#define MUTFUZZ_EXIT_UNREADABLE 66

void load_file(const char *path);
void load_buffer(const unsigned char *data, unsigned long n);
void get_value(void *dest, unsigned long n, int flags);
void seek_data_index(unsigned long offset);
int compare_value(const void *a, const void *b, unsigned long n);
void log_checkpoint(const char *msg);
void safe_abort(void);

void print_bytes(const char *label, const void *p, unsigned long n);
void dump_hex(const char *label, const void *p, unsigned long n, int tag);
void check_equal(const char *label, const void *a, const void *b, unsigned long n);
void check_true(const char *label, int cond);

#endif
