int donor_2(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    if (t > 0) { for (int i1 = 0; i1 < 16; i1++) { t += b[i1] + k; } } else { for (int i2 = 0; i2 < 16; i2++) { t += b[i2] * k; } }
    return acc + t;
}
