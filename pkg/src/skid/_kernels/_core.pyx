# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; mirrors the contracts in skid._kernels.pure."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, floor, sqrt

cnp.import_array()

IMPL = "compiled"


def rec_counts(r, el, int n_range, int n_elev,
               double r_min, double r_max, double el_min, double el_max):
    cdef cnp.float64_t[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef cnp.float64_t[::1] ev = np.ascontiguousarray(el, dtype=np.float64)
    out_arr = np.zeros((n_range, n_elev), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, n = rv.shape[0]
    cdef double r_scale = n_range / (r_max - r_min)
    cdef double e_scale = n_elev / (el_max - el_min)
    cdef double ri, ei
    cdef Py_ssize_t rb, eb
    for i in range(n):
        ri = rv[i]
        ei = ev[i]
        if ri < r_min or ri >= r_max or ei < el_min or ei >= el_max:
            continue
        rb = <Py_ssize_t>floor((ri - r_min) * r_scale)
        eb = <Py_ssize_t>floor((ei - el_min) * e_scale)
        if rb < 0:
            rb = 0
        elif rb > n_range - 1:
            rb = n_range - 1
        if eb < 0:
            eb = 0
        elif eb > n_elev - 1:
            eb = n_elev - 1
        out[rb, eb] += 1.0
    return out_arr


def spfh_accumulate(points, normals, query_idx, neighbor_idx):
    cdef cnp.float64_t[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] nrm = np.ascontiguousarray(normals, dtype=np.float64)
    cdef cnp.int64_t[::1] qi = np.ascontiguousarray(query_idx, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ni = np.ascontiguousarray(neighbor_idx, dtype=np.int64)
    cdef Py_ssize_t n_q = ni.shape[0]
    cdef Py_ssize_t k = ni.shape[1]
    out_arr = np.zeros((n_q, 33), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef double PI = np.pi

    cdef Py_ssize_t a, b, i, j, b0, b1, b2
    cdef double dx, dy, dz, dist, inv
    cdef double ux, uy, uz, vx, vy, vz, wx, wy, wz, vn
    cdef double f0, f1, f2
    for a in range(n_q):
        i = qi[a]
        ux = nrm[i, 0]; uy = nrm[i, 1]; uz = nrm[i, 2]
        for b in range(k):
            j = ni[a, b]
            if j == i:
                continue
            dx = pts[j, 0] - pts[i, 0]
            dy = pts[j, 1] - pts[i, 1]
            dz = pts[j, 2] - pts[i, 2]
            dist = sqrt(dx * dx + dy * dy + dz * dz)
            if dist <= 1e-12:
                continue
            inv = 1.0 / dist
            dx *= inv; dy *= inv; dz *= inv
            # v = u x d_hat
            vx = uy * dz - uz * dy
            vy = uz * dx - ux * dz
            vz = ux * dy - uy * dx
            vn = sqrt(vx * vx + vy * vy + vz * vz)
            if vn <= 1e-12:
                continue
            vx /= vn; vy /= vn; vz /= vn
            # w = u x v
            wx = uy * vz - uz * vy
            wy = uz * vx - ux * vz
            wz = ux * vy - uy * vx
            f0 = vx * nrm[j, 0] + vy * nrm[j, 1] + vz * nrm[j, 2]
            f1 = ux * dx + uy * dy + uz * dz
            f2 = atan2(
                wx * nrm[j, 0] + wy * nrm[j, 1] + wz * nrm[j, 2],
                ux * nrm[j, 0] + uy * nrm[j, 1] + uz * nrm[j, 2],
            )
            b0 = <Py_ssize_t>floor((f0 + 1.0) * 5.5)
            b1 = <Py_ssize_t>floor((f1 + 1.0) * 5.5)
            b2 = <Py_ssize_t>floor((f2 + PI) * (11.0 / (2.0 * PI)))
            if b0 < 0: b0 = 0
            elif b0 > 10: b0 = 10
            if b1 < 0: b1 = 0
            elif b1 > 10: b1 = 10
            if b2 < 0: b2 = 0
            elif b2 > 10: b2 = 10
            out[a, b0] += 1.0
            out[a, 11 + b1] += 1.0
            out[a, 22 + b2] += 1.0
    return out_arr


def point_plane_system(src, dst, normals, weights):
    cdef cnp.float64_t[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] d = np.ascontiguousarray(dst, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] nm = np.ascontiguousarray(normals, dtype=np.float64)
    cdef cnp.float64_t[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0]
    h_arr = np.zeros((6, 6), dtype=np.float64)
    b_arr = np.zeros(6, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] h = h_arr
    cdef cnp.float64_t[::1] bv = b_arr
    cdef double cost = 0.0
    cdef double jrow[6]
    cdef Py_ssize_t i, p, q
    cdef double r, wi, wr
    for i in range(n):
        jrow[0] = nm[i, 0]
        jrow[1] = nm[i, 1]
        jrow[2] = nm[i, 2]
        # src x n
        jrow[3] = s[i, 1] * nm[i, 2] - s[i, 2] * nm[i, 1]
        jrow[4] = s[i, 2] * nm[i, 0] - s[i, 0] * nm[i, 2]
        jrow[5] = s[i, 0] * nm[i, 1] - s[i, 1] * nm[i, 0]
        r = (nm[i, 0] * (s[i, 0] - d[i, 0])
             + nm[i, 1] * (s[i, 1] - d[i, 1])
             + nm[i, 2] * (s[i, 2] - d[i, 2]))
        wi = w[i]
        wr = wi * r
        cost += wr * r
        for p in range(6):
            bv[p] += wr * jrow[p]
            for q in range(6):
                h[p, q] += wi * jrow[p] * jrow[q]
    return h_arr, b_arr, cost
