int donor_8(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    k = k * 3;
    for (int i1 = 0; i1 < 16; i1++) { acc += b[i1] * 4; }
    for (int i2 = 0; i2 < 16; i2++) { k = t * acc; t = a[i2] + k; }
    for (int i3 = 0; i3 < 16; i3++) { k += t + t; }
    return acc + t;
}
