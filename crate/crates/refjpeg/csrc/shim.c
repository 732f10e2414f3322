#include <setjmp.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include <jpeglib.h>

struct shim_error {
    struct jpeg_error_mgr pub;
    jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

static void shim_error_exit(j_common_ptr cinfo) {
    struct shim_error *err = (struct shim_error *)cinfo->err;
    (*cinfo->err->format_message)(cinfo, err->message);
    longjmp(err->jump, 1);
}

static void shim_silence(j_common_ptr cinfo, int level) {
    (void)cinfo;
    (void)level;
}

/* Decode to interleaved RGB with libjpeg's default (islow IDCT, fancy
 * upsampling). On success *out is malloc'd and must be released with
 * refjpeg_free. Returns 0 on success; otherwise fills msg. */
int refjpeg_decode(const unsigned char *data, unsigned long len, unsigned char **out,
                   unsigned int *width, unsigned int *height, int *components,
                   char *msg, size_t msg_len) {
    struct jpeg_decompress_struct cinfo;
    struct shim_error err;
    unsigned char *volatile pixels = NULL;

    *out = NULL;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = shim_error_exit;
    err.pub.emit_message = shim_silence;
    if (setjmp(err.jump)) {
        snprintf(msg, msg_len, "%s", err.message);
        jpeg_destroy_decompress(&cinfo);
        free(pixels);
        return 1;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data, len);
    jpeg_read_header(&cinfo, TRUE);
    *components = cinfo.num_components;
    cinfo.out_color_space = JCS_RGB;
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);

    size_t stride = (size_t)cinfo.output_width * 3;
    pixels = malloc(stride * cinfo.output_height);
    if (pixels == NULL) {
        snprintf(msg, msg_len, "out of memory");
        jpeg_destroy_decompress(&cinfo);
        return 1;
    }
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    *width = cinfo.output_width;
    *height = cinfo.output_height;
    jpeg_destroy_decompress(&cinfo);
    *out = pixels;
    return 0;
}

void refjpeg_free(unsigned char *p) { free(p); }

/* Read the quantized coefficients of component `comp` without decoding
 * pixels. Blocks are written row-major over the component's block grid,
 * 64 natural-order values each, into a malloc'd buffer. */
int refjpeg_coefficients(const unsigned char *data, unsigned long len, int comp, short **out,
                         unsigned int *blocks_w, unsigned int *blocks_h, char *msg,
                         size_t msg_len) {
    struct jpeg_decompress_struct cinfo;
    struct shim_error err;
    short *volatile coeffs = NULL;

    *out = NULL;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = shim_error_exit;
    err.pub.emit_message = shim_silence;
    if (setjmp(err.jump)) {
        snprintf(msg, msg_len, "%s", err.message);
        jpeg_destroy_decompress(&cinfo);
        free(coeffs);
        return 1;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data, len);
    jpeg_read_header(&cinfo, TRUE);
    if (comp < 0 || comp >= cinfo.num_components) {
        snprintf(msg, msg_len, "no component %d", comp);
        jpeg_destroy_decompress(&cinfo);
        return 1;
    }
    jvirt_barray_ptr *arrays = jpeg_read_coefficients(&cinfo);
    jpeg_component_info *info = &cinfo.comp_info[comp];
    unsigned int bw = info->width_in_blocks;
    unsigned int bh = info->height_in_blocks;
    coeffs = malloc(sizeof(short) * 64 * (size_t)bw * bh);
    if (coeffs == NULL) {
        snprintf(msg, msg_len, "out of memory");
        jpeg_destroy_decompress(&cinfo);
        return 1;
    }
    for (unsigned int by = 0; by < bh; by++) {
        JBLOCKARRAY row = (*cinfo.mem->access_virt_barray)((j_common_ptr)&cinfo, arrays[comp],
                                                          by, 1, FALSE);
        for (unsigned int bx = 0; bx < bw; bx++) {
            for (int k = 0; k < 64; k++) {
                coeffs[((size_t)by * bw + bx) * 64 + k] = row[0][bx][k];
            }
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    *blocks_w = bw;
    *blocks_h = bh;
    *out = coeffs;
    return 0;
}

void refjpeg_free_coefficients(short *p) { free(p); }
