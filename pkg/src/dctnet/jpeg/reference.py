"""Reference JPEG decoder access for verification.

Builds two small libjpeg-based helpers on first use (requires a C
compiler and libjpeg development files): one dumps quantized DCT
coefficients via jpeg_read_coefficients, the other decodes to RGB with
the float IDCT and plain (non-fancy) chroma upsampling. SIMD code paths
are disabled via JSIMD_FORCENONE so the scalar reference arithmetic is
used.
"""

import os
import shutil
import subprocess
import tempfile
from functools import lru_cache
from pathlib import Path

import numpy as np

_DCTDUMP_C = r"""
#include <stdio.h>
#include <stdlib.h>
#include <jpeglib.h>
static void put_i32(int32_t v) { fwrite(&v, 4, 1, stdout); }
int main(int argc, char **argv) {
    if (argc != 2) return 2;
    FILE *f = fopen(argv[1], "rb");
    if (!f) return 2;
    struct jpeg_decompress_struct cinfo;
    struct jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    jvirt_barray_ptr *coef = jpeg_read_coefficients(&cinfo);
    put_i32(cinfo.num_components);
    for (int ci = 0; ci < cinfo.num_components; ci++) {
        jpeg_component_info *comp = &cinfo.comp_info[ci];
        put_i32((int32_t)comp->width_in_blocks);
        put_i32((int32_t)comp->height_in_blocks);
        JQUANT_TBL *qt = cinfo.quant_tbl_ptrs[comp->quant_tbl_no];
        for (int k = 0; k < 64; k++) put_i32((int32_t)qt->quantval[k]);
        for (JDIMENSION by = 0; by < comp->height_in_blocks; by++) {
            JBLOCKARRAY rows = (cinfo.mem->access_virt_barray)
                ((j_common_ptr)&cinfo, coef[ci], by, 1, FALSE);
            for (JDIMENSION bx = 0; bx < comp->width_in_blocks; bx++)
                for (int k = 0; k < 64; k++) put_i32((int32_t)rows[0][bx][k]);
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    fclose(f);
    return 0;
}
"""

_RGBDUMP_C = r"""
#include <stdio.h>
#include <stdlib.h>
#include <jpeglib.h>
int main(int argc, char **argv) {
    if (argc != 2) return 2;
    FILE *f = fopen(argv[1], "rb");
    if (!f) return 2;
    struct jpeg_decompress_struct cinfo;
    struct jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.dct_method = JDCT_FLOAT;
    cinfo.do_fancy_upsampling = FALSE;
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    unsigned int w = cinfo.output_width, h = cinfo.output_height;
    fwrite(&w, 4, 1, stdout);
    fwrite(&h, 4, 1, stdout);
    JSAMPARRAY buffer = (cinfo.mem->alloc_sarray)
        ((j_common_ptr)&cinfo, JPOOL_IMAGE, w * cinfo.output_components, 1);
    while (cinfo.output_scanline < h) {
        jpeg_read_scanlines(&cinfo, buffer, 1);
        fwrite(buffer[0], 1, w * cinfo.output_components, stdout);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    fclose(f);
    return 0;
}
"""

_ENV = dict(os.environ, JSIMD_FORCENONE="1")


class ReferenceUnavailable(RuntimeError):
    pass


@lru_cache(maxsize=1)
def _build_tools():
    cc = shutil.which("cc") or shutil.which("gcc")
    if cc is None:
        raise ReferenceUnavailable("no C compiler found for the reference decoder")
    build = Path(tempfile.mkdtemp(prefix="dctnet-ref-"))
    tools = {}
    for name, source in (("dctdump", _DCTDUMP_C), ("rgbdump", _RGBDUMP_C)):
        src = build / f"{name}.c"
        src.write_text(source)
        exe = build / name
        try:
            subprocess.run([cc, "-O2", "-o", str(exe), str(src), "-ljpeg"],
                           check=True, capture_output=True)
        except subprocess.CalledProcessError as e:
            raise ReferenceUnavailable(
                f"building {name} failed (libjpeg-dev missing?): "
                f"{e.stderr.decode(errors='replace')}") from None
        tools[name] = str(exe)
    return tools


def _run(tool, path):
    exe = _build_tools()[tool]
    return subprocess.run([exe, str(path)], check=True, capture_output=True,
                          env=_ENV).stdout


def reference_coefficients(path):
    """Quantized coefficient read-back: list of (qtable, blocks) per
    component, both in raster frequency order, blocks (hb, wb, 64)."""
    raw = np.frombuffer(_run("dctdump", path), dtype="<i4")
    ncomp = int(raw[0])
    pos = 1
    out = []
    for _ in range(ncomp):
        w, h = int(raw[pos]), int(raw[pos + 1])
        pos += 2
        qt = raw[pos:pos + 64].copy()
        pos += 64
        n = w * h * 64
        out.append((qt, raw[pos:pos + n].reshape(h, w, 64).copy()))
        pos += n
    return out


def reference_rgb(path):
    """Reference RGB decode (float IDCT, plain upsampling), uint8 HxWx3."""
    raw = _run("rgbdump", path)
    w, h = np.frombuffer(raw[:8], dtype="<u4")
    return np.frombuffer(raw[8:], dtype=np.uint8).reshape(int(h), int(w), 3).copy()
