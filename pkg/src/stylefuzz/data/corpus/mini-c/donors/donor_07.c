int donor_7(int n) {
    int a[32];
    int b[32];
    int acc = 0;
    int t = 1;
    int k = 0;
    if (t > 3) { for (int i1 = 0; i1 < 32; i1++) { k = acc + t; } } else { for (int i2 = 0; i2 < 32; i2++) { t = acc + k; } }
    return acc + t;
}
